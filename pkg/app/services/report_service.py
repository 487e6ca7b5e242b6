from concurrent.futures import ThreadPoolExecutor
import csv
import hashlib
import io
import json
import logging
import time

import numpy as np
from scipy.optimize import linear_sum_assignment

from app.config import bind_app_context, setting
from app.models.positivity import PurityConstraints
from app.models.report import OperatorFile, RunReport
from app.services.commutant_service import CommutantService
from app.services.extremal_service import ExtremalService
from app.services.fixture_service import FixtureService
from app.services.oracle_service import OracleService
from app.services.positivity_service import PositivityService
from app.services.su_algebra_service import SuAlgebraService
from app.utils.errors import DimensionError, NonCommutingError, QexError
from app.utils.validators import RunReportSchema

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ['param', 'branch_id', 'mean_value', 'purity']


def _purity(solution):
    """Tr ρ̂² = 1 − 2c_2"""
    return float(1.0 - 2.0 * solution.purity.c[0])


class ReportService:
    """
    CLI / API 的服务边界

    cmd_* 返回 (success, message, data)：成功时 data 为 RunReport，失败时为 QexError。
    """

    @staticmethod
    def _operator(source):
        if isinstance(source, OperatorFile):
            return source
        return FixtureService.load(source)

    @staticmethod
    def _timing(started, enabled):
        if enabled or setting('QEX_REPORT_TIMING'):
            return {'seconds': round(time.perf_counter() - started, 6)}
        return None

    @staticmethod
    def _constants_dict(c: PurityConstraints):
        return {f'c{k}': float(v) for k, v in enumerate(c.c, start=2)}

    @staticmethod
    def _failure(action, error):
        if not isinstance(error, QexError):
            logger.exception(f"{action}发生未预期错误")
            error = QexError(f"{action}失败: {error}")
        else:
            logger.error(f"{action}失败: {type(error).__name__}: {error.message}")
        return False, error.message, error

    @staticmethod
    def spectrum_oracle(op, spectrum):
        """--verify：Jacobi 本征值与谱的最大偏差"""
        oracle = OracleService.eigen_oracle(SuAlgebraService.reconstruct(op))
        deviation = float(np.abs(np.sort(spectrum.eigenvalues)[::-1] - oracle.eigenvalues).max())
        return {
            'eigenvalues': [float(v) for v in oracle.eigenvalues],
            'residual': oracle.residual,
            'sweeps': oracle.sweeps,
            'max_deviation': deviation
        }

    @staticmethod
    def extremal_oracle(op, solutions):
        """--verify：与置换点积集合以及迹上下界比较"""
        h_spec = OracleService.eigen_oracle(SuAlgebraService.reconstruct(op)).eigenvalues
        rho_spec = np.clip(OracleService.eigen_oracle(solutions[0].rho).eigenvalues, 0.0, None)
        rho_spec = rho_spec / rho_spec.sum()
        means = np.array(OracleService.permutation_means(h_spec, rho_spec))
        lower, upper = OracleService.trace_bounds(h_spec, rho_spec)
        deviation = max(float(np.abs(means - s.mean_value).min()) for s in solutions)
        return {
            'eigenvalues': [float(v) for v in h_spec],
            'rho_eigenvalues': [float(v) for v in rho_spec],
            'permutation_means': [float(v) for v in means],
            'trace_bounds': [lower, upper],
            'max_deviation': deviation
        }

    @classmethod
    def build_spectrum(cls, operator_file: OperatorFile, seed=0, verify=False, timing=False) -> RunReport:
        started = time.perf_counter()
        op = SuAlgebraService.decompose(operator_file.matrix, operator_file.name)
        param = CommutantService.critical_parametrization(op)
        spectrum = ExtremalService.extremal_spectrum(op, seed)
        return RunReport(
            mode='spectrum', input_digest=operator_file.digest, seed=seed, d=op.d,
            solutions=tuple(p.to_dict() for p in spectrum.projectors),
            spectrum={**spectrum.to_dict(), 'parametrization': param.to_dict()},
            oracle=cls.spectrum_oracle(op, spectrum) if verify else None,
            timing=cls._timing(started, timing), name=operator_file.name
        )

    @classmethod
    def build_extremal(cls, operator_file: OperatorFile, constants, seed=0, verify=False,
                       timing=False) -> RunReport:
        started = time.perf_counter()
        op = SuAlgebraService.decompose(operator_file.matrix, operator_file.name)
        c = PurityConstraints(op.d, tuple(constants))
        solutions = ExtremalService.extremal_states(op, c, seed)

        spectrum = None
        decompositions = ()
        if not c.is_pure:
            spectrum = ExtremalService.extremal_spectrum(op, seed)
            decompositions = tuple(cls._decompose(s, spectrum) for s in solutions)

        return RunReport(
            mode='pure' if c.is_pure else 'mixed', input_digest=operator_file.digest, seed=seed, d=op.d,
            constants=cls._constants_dict(c),
            solutions=tuple(s.to_dict() for s in solutions),
            spectrum=spectrum.to_dict() if spectrum is not None else None,
            decompositions=decompositions,
            oracle=cls.extremal_oracle(op, solutions) if verify else None,
            timing=cls._timing(started, timing), name=operator_file.name
        )

    @staticmethod
    def _decompose(solution, spectrum):
        try:
            return ExtremalService.convex_decomposition(solution, spectrum).to_dict()
        except NonCommutingError as e:
            # 简并本征空间内任取的投影不一定使混合态对角
            logger.warning(f"解 {solution.label} 无法在纯态投影基下分解: {e.message}")
            return None

    @staticmethod
    def _point(operator_file, param, value, constants, pure, seed):
        evaluated = FixtureService.with_parameter(operator_file, param, value)
        op = SuAlgebraService.decompose(evaluated.matrix, evaluated.name)
        if pure:
            solutions = ExtremalService.extremal_spectrum(op, seed).projectors
        else:
            solutions = ExtremalService.extremal_states(op, PurityConstraints(op.d, tuple(constants)), seed)
        return [(float(s.mean_value), _purity(s)) for s in solutions]

    @staticmethod
    def assign_branches(grid):
        """
        相邻网格点间按平均值做最近邻指派（Hungarian），保持分支编号连续

        Args:
            grid: [(参数值, [(mean, purity), ...]), ...]

        Returns:
            list of dict: param, branch_id, mean_value, purity
        """
        rows = []
        previous = {}
        next_id = 0
        for value, points in grid:
            ids = [None] * len(points)
            if previous and points:
                prev_ids = list(previous)
                prev_means = np.array([previous[i] for i in prev_ids])
                current = np.array([m for m, _ in points])
                matched_rows, matched_cols = linear_sum_assignment(np.abs(prev_means[:, None] - current[None, :]))
                for i, j in zip(matched_rows, matched_cols):
                    ids[j] = prev_ids[i]
            for j in range(len(points)):
                if ids[j] is None:
                    ids[j] = next_id
                    next_id += 1
            previous = {branch: mean for branch, (mean, _) in zip(ids, points)}
            for branch, (mean, purity) in sorted(zip(ids, points)):
                rows.append({'param': float(value), 'branch_id': branch, 'mean_value': mean, 'purity': purity})
        return rows

    @classmethod
    def build_sweep(cls, operator_file: OperatorFile, param, start, stop, steps, constants=None, pure=True,
                    seed=0, timing=False) -> RunReport:
        started = time.perf_counter()
        if steps < 1:
            raise DimensionError(f"步数 steps={steps} 必须 ≥ 1")
        # 先校验参数名，避免线程池里才报错
        FixtureService.with_parameter(operator_file, param, start)
        values = [float(start)] if start == stop else [float(v) for v in np.linspace(start, stop, steps)]

        def run(value):
            return cls._point(operator_file, param, value, constants, pure, seed)

        workers = max(1, min(setting('QEX_THREADS'), len(values)))
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(bind_app_context(run), values))

        rows = cls.assign_branches(list(zip(values, results)))
        if start == stop:
            # 单点扫描与 extremal 输出逐字节一致，param 列留空
            rows = [{**row, 'param': ''} for row in rows]
        logger.info(f"参数扫描完成: {param} ∈ [{start}, {stop}], {len(values)} 点, {len(rows)} 行")
        c = None if pure else cls._constants_dict(PurityConstraints(operator_file.d, tuple(constants)))
        return RunReport(
            mode='sweep', input_digest=operator_file.digest, seed=seed, d=operator_file.d,
            constants=c, rows=tuple(rows), timing=cls._timing(started, timing), name=operator_file.name
        )

    @classmethod
    def build_region(cls, d, resolution, timing=False) -> RunReport:
        started = time.perf_counter()
        rows = PositivityService.region_rows(d, resolution)
        digest = hashlib.sha256(json.dumps({'d': d, 'resolution': resolution}, sort_keys=True).encode()).hexdigest()
        return RunReport(mode='region', input_digest=digest, seed=0, d=d, rows=tuple(rows),
                         timing=cls._timing(started, timing))

    @classmethod
    def cmd_spectrum(cls, source, seed=0, verify=False, timing=False):
        try:
            report = cls.build_spectrum(cls._operator(source), seed, verify, timing)
            return True, "谱分解完成", report
        except Exception as e:
            return cls._failure("谱分解", e)

    @classmethod
    def cmd_extremal(cls, source, constants, seed=0, verify=False, timing=False):
        try:
            report = cls.build_extremal(cls._operator(source), constants, seed, verify, timing)
            return True, f"极值态求解完成: {len(report.solutions)} 个解", report
        except Exception as e:
            return cls._failure("极值态求解", e)

    @classmethod
    def cmd_sweep(cls, source, param, start, stop, steps, constants=None, pure=True, seed=0, timing=False):
        try:
            report = cls.build_sweep(cls._operator(source), param, start, stop, steps, constants, pure, seed, timing)
            return True, f"参数扫描完成: {len(report.rows)} 行", report
        except Exception as e:
            return cls._failure("参数扫描", e)

    @classmethod
    def cmd_region(cls, d, resolution, timing=False):
        try:
            report = cls.build_region(d, resolution, timing)
            return True, f"区域采样完成: {len(report.rows)} 点", report
        except Exception as e:
            return cls._failure("区域采样", e)

    @staticmethod
    def csv_rows(report: RunReport):
        """报告 → (表头, 行)；谱与极值态报告与单点扫描同列"""
        if report.mode == 'region':
            header = [f'c{k}' for k in range(2, report.d + 1)] + ['status', 'active']
            return header, list(report.rows)
        if report.mode == 'sweep':
            return SWEEP_COLUMNS, list(report.rows)
        rows = [{'param': '', 'branch_id': s['label'], 'mean_value': s['mean_value'],
                 'purity': float(1.0 - 2.0 * s['purity']['c2'])} for s in report.solutions]
        return SWEEP_COLUMNS, rows

    @staticmethod
    def dump(report: RunReport):
        """按 RunReportSchema 校验并导出报告；不符合当前 schema 版本时报错"""
        payload = report.to_dict()
        schema = RunReportSchema()
        errors = schema.validate(payload)
        if errors:
            raise QexError(f"报告不符合 schema {payload['schema']}", {'fields': errors})
        return schema.dump(payload)

    @classmethod
    def to_json(cls, report: RunReport):
        return json.dumps(cls.dump(report), sort_keys=True, indent=2, ensure_ascii=False)

    @classmethod
    def to_csv(cls, report: RunReport):
        header, rows = cls.csv_rows(report)
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=header, lineterminator='\n', extrasaction='ignore')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buffer.getvalue()
