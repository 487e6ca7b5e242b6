"""
qex 命令行

    flask qex spectrum --input degenerate_qutrit --verify
    flask qex extremal --input bec_qutrit --c2 29/100 --c3 1/50
    flask qex sweep --input quartit --param delta --from 0 --to 1 --steps 101 --pure --format csv
    flask qex region -d 3 --resolution 200 --out region.csv

也可以不经 flask 直接运行 `python app.py <command> ...`。
退出码：0 成功，2 输入校验失败，3 求解失败，4 文件读写失败。
"""
import logging

import click
from flask.cli import AppGroup
from marshmallow import ValidationError as SchemaError

from app.config import setting
from app.services.fixture_service import FixtureService
from app.services.report_service import ReportService
from app.utils.errors import FixtureIOError, QexError, ValidationError
from app.utils.validators import ConstantsSchema, parse_rational

logger = logging.getLogger(__name__)

qex = AppGroup('qex', help='极值密度矩阵计算')


class RationalType(click.ParamType):
    """'29/100' 这类有理数在此一次性转为 float"""

    name = 'rational'

    def convert(self, value, param, ctx):
        try:
            return parse_rational(value)
        except SchemaError as e:
            self.fail(str(e.messages[0] if isinstance(e.messages, list) else e.messages), param, ctx)


RATIONAL = RationalType()


def _fail(error: QexError):
    click.echo(f"错误 [{type(error).__name__}]: {error.message}", err=True)
    if error.details:
        click.echo(f"详情: {error.details}", err=True)
    raise SystemExit(error.exit_code)


def _emit(report, out, fmt):
    try:
        text = ReportService.to_csv(report) if fmt == 'csv' else ReportService.to_json(report) + '\n'
    except QexError as e:
        _fail(e)
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        with open(out, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
    except OSError as e:
        _fail(FixtureIOError(f"写入输出文件失败: {out}: {e}", {'path': out}))
    click.echo(f"报告已写入 {out}", err=True)


def _load(source):
    try:
        return FixtureService.load(source)
    except QexError as e:
        _fail(e)


def _constants(operator_file, pure, **flags):
    schema = ConstantsSchema()
    try:
        data = schema.load({'pure': pure, **{k: v for k, v in flags.items() if v is not None}})
        return schema.constants_for(data, operator_file.d)
    except SchemaError as e:
        _fail(ValidationError(f"纯度常数错误: {e.messages}"))


def _finish(result):
    success, message, data = result
    if not success:
        _fail(data)
    logger.info(message)
    return data


def input_option(f):
    return click.option('--input', 'source', required=True,
                        help='算符文件路径或内置算符名（见 `qex fixtures`）')(f)


def constant_options(f):
    for k in (6, 5, 4, 3, 2):
        f = click.option(f'--c{k}', f'c{k}', type=RATIONAL, default=None, help=f'纯度常数 c{k}（可写成有理数）')(f)
    return f


def output_options(f):
    f = click.option('--timing', is_flag=True, help='在报告中附带耗时')(f)
    f = click.option('--format', 'fmt', type=click.Choice(['json', 'csv']), default='json', show_default=True)(f)
    f = click.option('--out', type=click.Path(dir_okay=False), default=None, help='输出文件，默认标准输出')(f)
    return f


def seed_option(f):
    return click.option('--seed', type=int, default=None, help='求解器随机种子（默认取 QEX_DEFAULT_SEED）')(f)


def _seed(seed):
    return setting('QEX_DEFAULT_SEED') if seed is None else seed


@qex.command('spectrum')
@input_option
@seed_option
@click.option('--verify', is_flag=True, help='附加 Jacobi 本征值对照')
@output_options
def spectrum_command(source, seed, verify, out, fmt, timing):
    """不调用本征求解器的谱分解"""
    operator_file = _load(source)
    report = _finish(ReportService.cmd_spectrum(operator_file, _seed(seed), verify, timing))
    _emit(report, out, fmt)


@qex.command('extremal')
@input_option
@constant_options
@click.option('--pure', is_flag=True, help='纯态（所有 c_k = 0）')
@seed_option
@click.option('--verify', is_flag=True, help='附加置换点积与迹上下界对照')
@output_options
def extremal_command(source, c2, c3, c4, c5, c6, pure, seed, verify, out, fmt, timing):
    """给定纯度常数的极值密度矩阵"""
    operator_file = _load(source)
    constants = _constants(operator_file, pure, c2=c2, c3=c3, c4=c4, c5=c5, c6=c6)
    report = _finish(ReportService.cmd_extremal(operator_file, constants, _seed(seed), verify, timing))
    _emit(report, out, fmt)


@qex.command('sweep')
@input_option
@click.option('--param', required=True, help='扫描的参数名')
@click.option('--from', 'start', type=RATIONAL, required=True)
@click.option('--to', 'stop', type=RATIONAL, required=True)
@click.option('--steps', type=click.IntRange(min=1), default=11, show_default=True)
@constant_options
@click.option('--pure', is_flag=True, help='纯态分支（未给常数时默认）')
@seed_option
@output_options
def sweep_command(source, param, start, stop, steps, c2, c3, c4, c5, c6, pure, seed, out, fmt, timing):
    """沿一个参数扫描平均值分支"""
    operator_file = _load(source)
    flags = dict(c2=c2, c3=c3, c4=c4, c5=c5, c6=c6)
    pure = pure or all(v is None for v in flags.values())
    constants = None if pure else _constants(operator_file, False, **flags)
    report = _finish(ReportService.cmd_sweep(operator_file, param, start, stop, steps, constants, pure,
                                             _seed(seed), timing))
    _emit(report, out, fmt)


@qex.command('region')
@click.option('-d', 'd', type=int, required=True, help='维度，3 或 4')
@click.option('--resolution', type=click.IntRange(min=2), default=50, show_default=True)
@output_options
def region_command(d, resolution, out, fmt, timing):
    """可容许纯度常数区域的网格采样"""
    report = _finish(ReportService.cmd_region(d, resolution, timing))
    _emit(report, out, fmt)


@qex.command('fixtures')
def fixtures_command():
    """列出内置算符"""
    for name in FixtureService.list_fixtures():
        click.echo(name)


def main(args=None):
    """app.py 直接调用的入口（需在应用上下文中）"""
    qex.main(args=args, prog_name='qex', standalone_mode=True)
