# test_fixtures.py
import json

import pytest
import numpy as np
from marshmallow import ValidationError as SchemaError

from app.models.report import RunReport
from app.services.fixture_service import FixtureService
from app.services.report_service import ReportService
from app.utils.errors import FixtureIOError, NonHermitianError, QexError, UnknownParameterError, ValidationError
from app.utils.validators import ConstantsSchema, RunReportSchema, SweepSchema, parse_rational


@pytest.mark.parametrize('value, expected', [
    ('29/100', 0.29),
    (' 1/50 ', 0.02),
    ('0.5', 0.5),
    (3, 3.0),
    ('-7/3', -7 / 3),
])
def test_parse_rational(value, expected):
    assert parse_rational(value) == expected


@pytest.mark.parametrize('value', ['abc', '1/0', True, None])
def test_parse_rational_rejects(value):
    with pytest.raises(SchemaError):
        parse_rational(value)


class TestFixtureService:

    def test_degenerate_fixture_uses_rationals(self, app):
        """测试有理数字符串矩阵元"""
        operator_file = FixtureService.load('degenerate_qutrit')

        assert operator_file.d == 3
        assert operator_file.matrix[1, 1] == pytest.approx(13 / 3)
        assert operator_file.matrix[0, 2] == pytest.approx(-1 - 1j / 3)
        assert operator_file.terms is None

    def test_digest_is_stable(self, app):
        """测试摘要只依赖内容"""
        first = FixtureService.load('bec_qutrit')
        second = FixtureService.load('bec_qutrit')

        assert first.digest == second.digest
        assert first.with_parameters(b=2.0).digest != first.digest
        assert first.with_parameters(b=1.0).digest == first.digest

    def test_with_parameter(self, app):
        """测试参数覆盖后重新求值"""
        operator_file = FixtureService.load('quartit')
        changed = FixtureService.with_parameter(operator_file, 'delta', 0)

        assert changed.parameters['delta'] == 0.0
        assert changed.matrix[0, 1] == 0
        assert operator_file.matrix[0, 1] == pytest.approx(0.25)

    def test_unknown_parameter(self, app):
        with pytest.raises(UnknownParameterError):
            FixtureService.with_parameter(FixtureService.load('quartit'), 'zeta', 1.0)
        # 纯矩阵文件没有可扫描的参数
        with pytest.raises(UnknownParameterError):
            FixtureService.with_parameter(FixtureService.load('degenerate_qutrit'), 'a', 1.0)

    def test_load_from_path(self, app, write_operator):
        path = write_operator(np.diag([1.0, 2.0, 3.0]), 'diag3')
        operator_file = FixtureService.load(path)

        assert operator_file.name == 'diag3'
        assert operator_file.source == path

    def test_library_only(self, app, write_operator):
        """测试 library_only 不读取路径"""
        path = write_operator(np.diag([1.0, 2.0]), 'outside')
        with pytest.raises(FixtureIOError):
            FixtureService.load(path, library_only=True)

    def test_missing(self, app):
        with pytest.raises(FixtureIOError) as info:
            FixtureService.load('no_such_operator')
        assert 'bec_qutrit' in info.value.details['library']

    def test_broken_json(self, app, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{not json', encoding='utf-8')
        with pytest.raises(FixtureIOError):
            FixtureService.load(str(path))

    @pytest.mark.parametrize('payload', [
        {'matrix': [[1, 0]]},
        {'matrix': [[1, 0], [0, 1]], 'd': 3},
        {'terms': {'a': [[1, 0], [0, 1]]}},
        {'parameters': {'a': 1}, 'terms': {'a': [[1, 0], [0, 1]], '1': [[1]]}},
        {'name': 'nothing'},
        {'matrix': [[{'re': 1, 'phase': 0}]]},
    ])
    def test_schema_errors(self, app, payload):
        """测试结构错误统一转为 ValidationError"""
        with pytest.raises(ValidationError):
            FixtureService.parse(payload)

    def test_non_hermitian(self, app):
        with pytest.raises(NonHermitianError):
            FixtureService.parse({'matrix': [[1, 1], [0, 1]]})

    def test_payload_roundtrip(self, app):
        """测试写回磁盘的结构可以再次加载"""
        operator_file = FixtureService.load('qubit_generic')
        again = FixtureService.parse(json.loads(json.dumps(FixtureService.to_payload(operator_file))))

        assert np.allclose(again.matrix, operator_file.matrix)
        assert again.digest == operator_file.digest


class TestSchemas:

    def test_constants_for(self):
        schema = ConstantsSchema()

        assert schema.constants_for(schema.load({'c2': '29/100', 'c3': '1/50'}), 3) == (0.29, 0.02)
        assert schema.constants_for(schema.load({'pure': True}), 4) == (0.0, 0.0, 0.0)
        with pytest.raises(SchemaError):
            schema.constants_for(schema.load({'c2': 0.1}), 3)
        with pytest.raises(SchemaError):
            schema.constants_for(schema.load({'c2': 0.1, 'c3': 0.0, 'c4': 0.0}), 3)

    def test_sweep_schema(self):
        loaded = SweepSchema().load({'param': 'delta', 'from': 0, 'to': 1})

        assert (loaded['start'], loaded['stop'], loaded['steps']) == (0.0, 1.0, 11)
        with pytest.raises(SchemaError):
            SweepSchema().load({'param': 'delta', 'from': 0, 'to': 1, 'steps': 0})

    def test_run_report_schema(self):
        """测试报告经 JSON 后可按 schema 读回"""
        report = RunReport(mode='region', input_digest='0' * 64, seed=0, d=3,
                           rows=({'c2': 0.0, 'c3': 0.0, 'status': 'admissible', 'active': ''},))
        loaded = RunReportSchema().load(json.loads(ReportService.to_json(report)))

        assert loaded['schema'] == 'qex-report/1'
        assert loaded['rows'][0]['status'] == 'admissible'
        with pytest.raises(SchemaError):
            RunReportSchema().load({**json.loads(ReportService.to_json(report)), 'schema': 'qex-report/0'})

    def test_dump_rejects_invalid_report(self):
        """测试输出前按 schema 校验报告"""
        report = RunReport(mode='eigen', input_digest='x', seed=0, d=3)

        with pytest.raises(QexError) as info:
            ReportService.dump(report)
        assert 'mode' in info.value.details['fields']
        with pytest.raises(QexError):
            ReportService.to_json(RunReport(mode='region', input_digest='x', seed=0, d=1))


class TestReportHelpers:

    def test_assign_branches_follows_nearest_mean(self):
        """测试分支编号按相邻点平均值的最近邻延续"""
        grid = [
            (0.0, [(2.0, 1.0), (1.0, 1.0)]),
            (0.5, [(1.1, 1.0), (1.9, 1.0)]),
            (1.0, [(1.2, 1.0), (1.8, 1.0)]),
        ]
        rows = ReportService.assign_branches(grid)

        by_branch = {}
        for row in rows:
            by_branch.setdefault(row['branch_id'], []).append(row['mean_value'])
        assert by_branch == {0: [2.0, 1.9, 1.8], 1: [1.0, 1.1, 1.2]}

    def test_assign_branches_new_branch(self):
        """测试点数增加时分配新的分支编号"""
        rows = ReportService.assign_branches([(0.0, [(1.0, 1.0)]), (1.0, [(1.0, 1.0), (3.0, 1.0)])])
        assert [row['branch_id'] for row in rows] == [0, 0, 1]

    def test_csv_float_format(self):
        """测试 CSV 中浮点数按 repr 输出"""
        report = RunReport(mode='sweep', input_digest='x', seed=0, d=2,
                           rows=({'param': 0.1, 'branch_id': 0, 'mean_value': 1 / 3, 'purity': 1.0},))
        lines = ReportService.to_csv(report).splitlines()

        assert lines == ['param,branch_id,mean_value,purity', f'0.1,0,{1 / 3!r},1.0']

    def test_cmd_failure_returns_error(self, app):
        """测试 cmd_* 失败时返回 (False, message, error)"""
        success, message, error = ReportService.cmd_region(5, 4)

        assert not success
        assert error.exit_code == 2
        assert message == error.message
