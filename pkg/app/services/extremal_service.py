from itertools import combinations
import logging

import numpy as np

from app.config import setting
from app.models.algebra import BlochVector, HermitianOperator, PurityClass
from app.models.commutant import NullSpaceParametrization
from app.models.positivity import PurityConstraints
from app.models.solution import ConvexDecomposition, CriticalSolution, SpectralResult
from app.services.commutant_service import CommutantService
from app.services.poly_solver_service import PolySolverService
from app.services.positivity_service import PositivityService
from app.services.su_algebra_service import SuAlgebraService
from app.utils.errors import (DimensionError, InadmissibleConstraintsError, NonCommutingError,
                              ScalarOperatorError, SolverExhaustedError, SpectrumIncompleteError)

logger = logging.getLogger(__name__)

MAX_ZEROING_ATTEMPTS = 8


class ExtremalService:
    """极值密度矩阵流程：非简并流程、简并递归正交化、平均值与凸分解"""

    @staticmethod
    def mean_value(op: HermitianOperator, bloch) -> float:
        """⟨Ĥ⟩ = h0/d + ½ h·λ"""
        values = bloch.values if isinstance(bloch, BlochVector) else np.asarray(bloch, dtype=float)
        if values.shape != op.h.shape:
            raise DimensionError(f"Bloch 向量长度 {values.shape} 与算符 d={op.d} 不符")
        return float(op.h0 / op.d + 0.5 * np.dot(op.h, values))

    @staticmethod
    def mean_value_coefficients(op: HermitianOperator, param: NullSpaceParametrization):
        """⟨Ĥ⟩ 对各自由变量的系数 ½ Nᵀh"""
        return 0.5 * np.asarray(param.basis).T @ op.h

    @staticmethod
    def is_scalar(op: HermitianOperator):
        return op.bloch_norm <= setting('TAU_HERM_REL') * max(1.0, abs(op.h0))

    @classmethod
    def zeroing_orders(cls, op: HermitianOperator, param: NullSpaceParametrization, surplus):
        """
        置零候选集合，首选排在最前

        不出现在 ⟨Ĥ⟩ 中的自由变量先置零（按下标升序），其次下标最小的其余变量。
        """
        if surplus <= 0:
            yield ()
            return
        coefficients = cls.mean_value_coefficients(op, param)
        tolerance = 1e-12 * max(1.0, op.bloch_norm)
        absent = [i for i, w in zip(param.free_indices, coefficients) if abs(w) <= tolerance]
        present = [i for i, w in zip(param.free_indices, coefficients) if abs(w) > tolerance]
        ordered = absent + present
        for attempt, chosen in enumerate(combinations(ordered, surplus)):
            if attempt >= MAX_ZEROING_ATTEMPTS:
                return
            yield chosen

    @classmethod
    def build_solution(cls, op: HermitianOperator, bloch_values, purity_class, residual=0.0):
        rho = SuAlgebraService.density_from_bloch(bloch_values)
        rho = 0.5 * (rho + rho.conj().T)
        H = SuAlgebraService.reconstruct(op)
        commutator = H @ rho - rho @ H
        return CriticalSolution(
            bloch=BlochVector(op.d, bloch_values, purity_class),
            rho=rho,
            mean_value=cls.mean_value(op, bloch_values),
            commutator_residual=float(np.abs(commutator).max()),
            purity=PositivityService.constants_of_state(rho),
            residual=float(residual)
        )

    @staticmethod
    def sort_solutions(solutions):
        """平均值降序，平局按 Bloch 向量字典序；重新编号"""
        ordered = sorted(solutions, key=lambda s: (-round(s.mean_value, 12), tuple(np.round(s.bloch.values, 12))))
        return [s.with_label(m) for m, s in enumerate(ordered)]

    @classmethod
    def _solutions_from(cls, op, system, solution_set, purity_class):
        return [cls.build_solution(op, system.bloch(x), purity_class, r)
                for x, r in zip(solution_set.solutions, solution_set.residuals)]

    @classmethod
    def extremal_states(cls, op: HermitianOperator, c: PurityConstraints, seed=0):
        """
        给定纯度常数的极值密度矩阵

        Returns:
            list of CriticalSolution，按 ⟨Ĥ⟩ 降序
        """
        if c.d != op.d:
            raise DimensionError(f"纯度常数维度 d={c.d} 与算符维度 d={op.d} 不一致")
        if cls.is_scalar(op):
            raise ScalarOperatorError("scalar operator: 标量算符没有谱信息", {'h0': op.h0})

        admissibility = PositivityService.is_admissible(c)
        if not admissibility.accepted:
            raise InadmissibleConstraintsError(
                f"纯度常数不可容许，违反条件 {admissibility.violated_condition}",
                {'violated': admissibility.violated_condition}
            )

        if c.is_maximally_mixed(setting('TAU_BEZ')):
            return [cls.build_solution(op, np.zeros(op.d * op.d - 1), PurityClass.MIXED).with_label(0)]

        param = CommutantService.critical_parametrization(op)
        surplus = param.n - (op.d - 1)
        purity_class = PurityClass.PURE if c.is_pure else PurityClass.MIXED

        last_error = None
        for fixed in cls.zeroing_orders(op, param, surplus):
            try:
                system = PolySolverService.build_constraint_system(param, fixed, c)
                found = PolySolverService.solve(system, seed)
            except SolverExhaustedError as e:
                logger.warning(f"置零 {[i + 1 for i in fixed]} 无解，尝试下一组")
                last_error = e
                continue
            solutions = cls.sort_solutions(cls._solutions_from(op, system, found, purity_class))
            logger.info(f"极值态求解完成: {len(solutions)} 个解，置零 {[i + 1 for i in fixed]}")
            return solutions

        raise last_error or SolverExhaustedError("没有可用的置零方案")

    @classmethod
    def _accept(cls, candidates, accepted, d):
        """贪心接受与已有投影正交且线性无关的候选"""
        tau_orth = setting('TAU_ORTH')
        tau_gram = setting('TAU_GRAM')
        taken = []
        for candidate in candidates:
            if len(accepted) + len(taken) >= d:
                break
            current = accepted + taken
            overlaps = [float(np.trace(candidate.rho @ p.rho).real) for p in current]
            if any(abs(o) > tau_orth for o in overlaps):
                continue
            family = [p.rho for p in current] + [candidate.rho]
            gram = np.array([[np.trace(a @ b).real for b in family] for a in family])
            if np.linalg.det(gram) < tau_gram:
                logger.warning("候选投影与已有投影线性相关，丢弃")
                continue
            taken.append(candidate)
        return taken

    @classmethod
    def _pure_candidates(cls, op, param, projectors, seed):
        """一轮纯态求解：首轮置零多余变量（失败则释放），后续轮在正交约束下求解"""
        pure = PurityConstraints.pure(op.d)
        orthogonal = [p.rho for p in projectors]
        if projectors:
            restricted = CommutantService.restrict_orthogonal(param, [p.bloch.values for p in projectors])
            system = PolySolverService.build_constraint_system(restricted, (), pure, orthogonal, strict_arity=False)
            found = PolySolverService.solve(system, seed)
            return cls.sort_solutions(cls._solutions_from(op, system, found, PurityClass.PURE))

        surplus = param.n - (op.d - 1)
        for fixed in cls.zeroing_orders(op, param, surplus):
            try:
                system = PolySolverService.build_constraint_system(param, fixed, pure)
                found = PolySolverService.solve(system, seed)
            except SolverExhaustedError:
                logger.warning(f"置零 {[i + 1 for i in fixed]} 下无纯态解")
                continue
            return cls.sort_solutions(cls._solutions_from(op, system, found, PurityClass.PURE))

        logger.info("释放置零变量，在完整核空间上求解纯态")
        system = PolySolverService.build_constraint_system(param, (), pure, strict_arity=False)
        found = PolySolverService.solve(system, seed)
        return cls.sort_solutions(cls._solutions_from(op, system, found, PurityClass.PURE))

    @classmethod
    def extremal_spectrum(cls, op: HermitianOperator, seed=0) -> SpectralResult:
        """
        不调用本征求解器的谱分解

        非简并时一次纯态求解给出 d 个正交投影；简并时逐轮加正交条件递归，
        直到收集到 d 个秩一投影（重根按重数计）。
        """
        if cls.is_scalar(op):
            raise ScalarOperatorError("scalar operator: 标量算符的谱只有 h0/d", {'h0': op.h0})

        d = op.d
        param = CommutantService.critical_parametrization(op)
        orbit = CommutantService.classify_orbit(param.r, d)
        budget = d + setting('SPECTRUM_RETRY_BUDGET')

        projectors = []
        rounds = 0
        failures = 0
        while len(projectors) < d:
            rounds += 1
            if rounds > budget:
                raise SpectrumIncompleteError(
                    f"{rounds - 1} 轮后只得到 {len(projectors)}/{d} 个正交投影",
                    partial=projectors, details={'found': len(projectors), 'rounds': rounds - 1}
                )
            try:
                candidates = cls._pure_candidates(op, param, projectors, seed + failures)
            except SolverExhaustedError as e:
                failures += 1
                logger.warning(f"第 {rounds} 轮纯态求解失败: {e.message}")
                continue
            taken = cls._accept(candidates, projectors, d)
            if not taken:
                failures += 1
                logger.warning(f"第 {rounds} 轮没有新的正交投影")
                continue
            projectors.extend(taken)
            logger.info(f"第 {rounds} 轮新增 {len(taken)} 个投影，共 {len(projectors)}/{d}")

        projectors = cls.sort_solutions(projectors)
        completeness = float(np.abs(sum(p.rho for p in projectors) - np.eye(d)).max())
        eigenvalues = np.array([p.mean_value for p in projectors])
        return SpectralResult(tuple(projectors), eigenvalues, completeness, rounds=rounds, orbit=orbit)

    @classmethod
    def convex_decomposition(cls, mixed: CriticalSolution, pure: SpectralResult) -> ConvexDecomposition:
        """p_i = Tr(ρ̂_mixed ρ̂_i)，要求二者可同时对角化"""
        generator = sum(e * p.rho for e, p in zip(pure.eigenvalues, pure.projectors))
        scale = max(1.0, float(np.abs(generator).max()))
        commutator = float(np.abs(mixed.rho @ generator - generator @ mixed.rho).max())
        if commutator > setting('TAU_NULL') * scale:
            raise NonCommutingError(f"混合态与谱算符不对易，残差 {commutator:.3e}",
                                    {'commutator': commutator})

        weights = np.array([np.trace(mixed.rho @ p.rho).real for p in pure.projectors])
        rebuilt = sum(w * p.rho for w, p in zip(weights, pure.projectors))
        reconstruction = float(np.abs(rebuilt - mixed.rho).max())
        if reconstruction > 1e-8:
            raise NonCommutingError(f"混合态不在投影基下对角，重构残差 {reconstruction:.3e}",
                                    {'reconstruction': reconstruction})
        return ConvexDecomposition(weights, pure, reconstruction)

    @classmethod
    def numerical_range(cls, op: HermitianOperator, seed=0):
        if cls.is_scalar(op):
            value = op.h0 / op.d
            return [value, value]
        spectrum = cls.extremal_spectrum(op, seed)
        return [float(spectrum.eigenvalues.min()), float(spectrum.eigenvalues.max())]
