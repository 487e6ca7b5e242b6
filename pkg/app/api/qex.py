from flask import Blueprint, request
from marshmallow import ValidationError as SchemaError

from app import limiter
from app.config import setting
from app.services.fixture_service import FixtureService
from app.services.report_service import ReportService
from app.utils.errors import QexError
from app.utils.helpers import error_response, qex_error_response, success_response, validate_json
from app.utils.validators import ConstantsSchema, SweepSchema

bp = Blueprint('qex', __name__)


def _rate():
    return setting('QEX_RATELIMIT')


def _operator_from(data):
    """请求体里的 operator 可以是内置算符名，也可以是完整的算符文件对象"""
    operator = data.get('operator')
    if isinstance(operator, str):
        return FixtureService.load(operator, library_only=True)
    if isinstance(operator, dict):
        return FixtureService.parse(operator, source='request')
    raise SchemaError("operator 必须是内置算符名或算符文件对象", 'operator')


def _seed(data):
    seed = data.get('seed', setting('QEX_DEFAULT_SEED'))
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise SchemaError("seed 必须是整数", 'seed')
    return seed


def _respond(result):
    success, message, data = result
    if not success:
        return qex_error_response(data)
    return success_response({'report': ReportService.dump(data)}, message)


def _handle(builder):
    try:
        return builder()
    except SchemaError as e:
        return error_response("请求参数错误", 400, {'fields': e.messages})
    except QexError as e:
        return qex_error_response(e)


@bp.route('/spectrum', methods=['POST'])
@limiter.limit(_rate)
@validate_json('operator')
def spectrum():
    """
    谱分解
    ---
    tags:
      - Qex
    summary: 不调用本征求解器求算符的全部本征值与投影
    parameters:
      - name: body
        in: body
        required: true
        schema:
          type: object
          required:
            - operator
          properties:
            operator:
              description: 内置算符名或算符文件对象
              example: "degenerate_qutrit"
            seed:
              type: integer
              example: 0
            verify:
              type: boolean
              description: 附加 Jacobi 本征值对照
              example: true
    responses:
      200:
        description: 谱分解报告
      400:
        description: 输入校验失败（非厄米、标量算符等）
      422:
        description: 求解器未能收集到完整的正交投影
    """
    data = request.get_json()

    def run():
        operator_file = _operator_from(data)
        return _respond(ReportService.cmd_spectrum(operator_file, _seed(data), bool(data.get('verify'))))
    return _handle(run)


@bp.route('/extremal', methods=['POST'])
@limiter.limit(_rate)
@validate_json('operator')
def extremal():
    """
    极值密度矩阵
    ---
    tags:
      - Qex
    summary: 给定纯度常数求全部极值密度矩阵与平均值
    parameters:
      - name: body
        in: body
        required: true
        schema:
          type: object
          required:
            - operator
          properties:
            operator:
              example: "bec_qutrit"
            pure:
              type: boolean
              example: false
            c2:
              description: 数值或有理数字符串
              example: "29/100"
            c3:
              example: "1/50"
            c4:
              example: null
            seed:
              type: integer
              example: 0
            verify:
              type: boolean
    responses:
      200:
        description: 极值态报告（混合态附带凸分解）
      400:
        description: 纯度常数不可容许或缺失
      422:
        description: 求解器耗尽
    """
    data = request.get_json()

    def run():
        operator_file = _operator_from(data)
        schema = ConstantsSchema()
        constants = schema.constants_for(schema.load(data), operator_file.d)
        return _respond(ReportService.cmd_extremal(operator_file, constants, _seed(data), bool(data.get('verify'))))
    return _handle(run)


@bp.route('/sweep', methods=['POST'])
@limiter.limit(_rate)
@validate_json('operator', 'param', 'from', 'to')
def sweep():
    """
    参数扫描
    ---
    tags:
      - Qex
    summary: 沿算符的一个参数扫描平均值分支
    parameters:
      - name: body
        in: body
        required: true
        schema:
          type: object
          required:
            - operator
            - param
            - from
            - to
          properties:
            operator:
              example: "quartit"
            param:
              type: string
              example: "delta"
            from:
              type: number
              example: 0
            to:
              type: number
              example: 1
            steps:
              type: integer
              example: 11
            pure:
              type: boolean
              example: true
    responses:
      200:
        description: 扫描报告，rows 为 param/branch_id/mean_value/purity
      400:
        description: 参数名不存在等
    """
    data = request.get_json()

    def run():
        operator_file = _operator_from(data)
        schema = SweepSchema()
        loaded = schema.load(data)
        pure = loaded['pure'] or all(loaded.get(f'c{k}') is None for k in range(2, 7))
        constants = None if pure else schema.constants_for(loaded, operator_file.d)
        return _respond(ReportService.cmd_sweep(operator_file, loaded['param'], loaded['start'], loaded['stop'],
                                                loaded['steps'], constants, pure, _seed(data)))
    return _handle(run)


@bp.route('/region', methods=['POST'])
@limiter.limit(_rate)
@validate_json('d')
def region():
    """
    可容许区域采样
    ---
    tags:
      - Qex
    parameters:
      - name: body
        in: body
        required: true
        schema:
          type: object
          required:
            - d
          properties:
            d:
              type: integer
              enum: [3, 4]
            resolution:
              type: integer
              example: 20
    responses:
      200:
        description: 每个网格点的状态与活动条件
      400:
        description: 不支持的维度
    """
    data = request.get_json()
    d = data.get('d')
    resolution = data.get('resolution', 20)
    if not isinstance(d, int) or not isinstance(resolution, int):
        return error_response("d 与 resolution 必须是整数", 400)
    if resolution > 400:
        return error_response("resolution 不能超过 400", 400)
    return _respond(ReportService.cmd_region(d, resolution))


@bp.route('/fixtures', methods=['GET'])
def list_fixtures():
    """
    内置算符列表
    ---
    tags:
      - Qex
    responses:
      200:
        description: 算符名称列表
    """
    return success_response({'fixtures': FixtureService.list_fixtures()}, "获取内置算符成功")


@bp.route('/fixtures/<name>', methods=['GET'])
def get_fixture(name):
    """
    内置算符详情
    ---
    tags:
      - Qex
    parameters:
      - name: name
        in: path
        type: string
        required: true
    responses:
      200:
        description: 算符文件内容与摘要
      404:
        description: 算符不存在
    """
    if '/' in name or '\\' in name or name.startswith('.'):
        return error_response("算符名不合法", 400)
    try:
        operator_file = FixtureService.load(name, library_only=True)
    except QexError as e:
        return qex_error_response(e)
    return success_response({
        'fixture': FixtureService.to_payload(operator_file),
        'digest': operator_file.digest
    }, "获取内置算符成功")
