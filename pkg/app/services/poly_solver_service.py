from functools import partial
from math import ceil, factorial, log2
import logging

import numpy as np
from scipy.stats import qmc

from app.config import setting
from app.models.algebra import BlochVector
from app.models.commutant import NullSpaceParametrization
from app.models.positivity import PurityConstraints
from app.models.solution import ConstraintSystem, SolutionSet
from app.services.positivity_service import PositivityService
from app.services.su_algebra_service import SuAlgebraService
from app.utils.errors import DimensionError, InadmissibleConstraintsError, SolverExhaustedError

logger = logging.getLogger(__name__)


def _densities(rho0, directions, x):
    return rho0[None, :, :] + np.einsum('sn,nab->sab', x, directions)


def _mixed_terms(rho0, directions, constants, x, with_jacobian):
    """a_k(x) − c_k 及其解析 Jacobian（对 Newton–Girard 递推逐项求导）"""
    d = rho0.shape[0]
    rho = _densities(rho0, directions, x)
    S, n = x.shape

    powers = [np.broadcast_to(np.eye(d, dtype=complex), rho.shape)]
    for _ in range(d):
        powers.append(powers[-1] @ rho)
    t = [None] + [np.trace(P, axis1=1, axis2=2).real for P in powers[1:]]
    dt = [None]
    if with_jacobian:
        dt += [j * np.einsum('sab,nba->sn', powers[j - 1], directions).real for j in range(1, d + 1)]

    a = [np.ones(S)]
    da = [np.zeros((S, n))]
    for k in range(1, d + 1):
        acc = np.zeros(S)
        dacc = np.zeros((S, n))
        for j in range(1, k + 1):
            sign = (-1.0) ** (j - 1)
            acc += sign * a[k - j] * t[j]
            if with_jacobian:
                dacc += sign * (da[k - j] * t[j][:, None] + a[k - j][:, None] * dt[j])
        a.append(acc / k)
        da.append(dacc / k)

    residual = np.stack([a[k] - constants[k - 2] for k in range(2, d + 1)], axis=1)
    if not with_jacobian:
        return residual
    return np.stack([da[k] for k in range(2, d + 1)], axis=1)


def _embed_hermitian(X, d):
    upper = np.triu_indices(d)
    strict = np.triu_indices(d, 1)
    return np.concatenate([X[..., upper[0], upper[1]].real, X[..., strict[0], strict[1]].imag], axis=-1)


def _embed_full(X, d):
    flat = X.reshape(X.shape[:-2] + (d * d,))
    return np.concatenate([flat.real, flat.imag], axis=-1)


def _pure_terms(rho0, directions, orthogonal_to, x, with_jacobian):
    """ρ̂² − ρ̂ 与 ρ̂·ρ̂_k 的实嵌入；二者在秩一投影处同时为零"""
    d = rho0.shape[0]
    rho = _densities(rho0, directions, x)
    if not with_jacobian:
        parts = [_embed_hermitian(rho @ rho - rho, d)]
        parts += [_embed_full(rho @ P, d) for P in orthogonal_to]
        return np.concatenate(parts, axis=1)

    S = x.shape[0]
    derivative = (np.einsum('sab,nbc->snac', rho, directions)
                  + np.einsum('nab,sbc->snac', directions, rho)
                  - directions[None, :, :, :])
    parts = [_embed_hermitian(derivative, d)]
    for P in orthogonal_to:
        block = _embed_full(np.einsum('nab,bc->nac', directions, P), d)
        parts.append(np.broadcast_to(block, (S,) + block.shape))
    return np.concatenate(parts, axis=2).transpose(0, 2, 1)


def _cube_to_ball(points):
    """立方体 [−1, 1]^n 径向映射到单位球"""
    sup = np.abs(points).max(axis=1)
    two = np.linalg.norm(points, axis=1)
    factor = np.divide(sup, two, out=np.zeros_like(sup), where=two > 0)
    return points * factor[:, None]


class PolySolverService:
    """多起点阻尼 Newton（Levenberg–Marquardt）求解纯度约束方程组"""

    @staticmethod
    def count_bound(d):
        if d < 2:
            raise DimensionError(f"d={d} 必须 ≥ 2")
        return factorial(d)

    @classmethod
    def build_constraint_system(cls, param: NullSpaceParametrization, fixed_zero, c: PurityConstraints,
                                orthogonal_to=(), strict_arity=True) -> ConstraintSystem:
        """
        构建约束方程组

        Args:
            param: 核空间参数化
            fixed_zero: 置零的自由变量（0 起始 Bloch 下标）
            c: 纯度常数
            orthogonal_to: 已求得的投影矩阵，仅纯态模式使用
            strict_arity: 纯态模式下是否要求恰好 d−1 个未知数；混合态模式始终要求

        Returns:
            ConstraintSystem
        """
        d = param.d
        if c.d != d:
            raise DimensionError(f"纯度常数维度 d={c.d} 与参数化维度 d={d} 不一致")
        fixed = tuple(sorted(set(int(i) for i in fixed_zero)))
        unknown = [i for i in fixed if i not in param.free_indices]
        if unknown:
            raise DimensionError(f"置零下标 {[i + 1 for i in unknown]} 不是自由变量")

        keep = [pos for pos, index in enumerate(param.free_indices) if index not in fixed]
        arity = len(keep)
        mode = c.kind
        if (strict_arity or mode == 'mixed') and arity != d - 1:
            raise DimensionError(
                f"置零后剩余 {arity} 个自由变量，需要恰好 d−1 = {d - 1} 个",
                {'free': param.n, 'fixed_zero': len(fixed)}
            )

        admissibility = PositivityService.is_admissible(c)
        if not admissibility.accepted:
            raise InadmissibleConstraintsError(
                f"纯度常数不可容许，违反条件 {admissibility.violated_condition}",
                {'violated': admissibility.violated_condition}
            )

        generators = SuAlgebraService.build_generators(d).matrices
        basis = np.asarray(param.basis)[:, keep]
        rho0 = np.eye(d) / d + 0.5 * np.einsum('k,kab->ab', param.offset, generators)
        directions = 0.5 * np.einsum('kn,kab->nab', basis, generators)

        if mode == 'mixed':
            constants = np.array(c.c)
            residual_map = partial(_mixed_terms, rho0, directions, constants, with_jacobian=False)
            jacobian_map = partial(_mixed_terms, rho0, directions, constants, with_jacobian=True)
            orthogonal = ()
        else:
            orthogonal = tuple(np.asarray(P, dtype=complex) for P in orthogonal_to)
            residual_map = partial(_pure_terms, rho0, directions, orthogonal, with_jacobian=False)
            jacobian_map = partial(_pure_terms, rho0, directions, orthogonal, with_jacobian=True)

        return ConstraintSystem(
            d=d, arity=arity, mode=mode, constants=c, param=param, fixed_zero=fixed,
            offset=param.offset, basis=basis,
            residual_map=lambda x, f=residual_map: f(np.atleast_2d(x)),
            jacobian_map=lambda x, f=jacobian_map: f(np.atleast_2d(x)),
            orthogonal_to=orthogonal
        )

    @classmethod
    def solve(cls, system: ConstraintSystem, seed=0) -> SolutionSet:
        d = system.d
        n = system.arity
        bound = cls.count_bound(d)
        target = d - len(system.orthogonal_to) if system.mode == 'pure' else bound
        tau_sol = setting('TAU_SOL')

        if n == 0:
            x = np.zeros((1, 0))
            residual = float(np.abs(system.residual_map(x)).max())
            if residual < tau_sol and cls._is_positive(system, x[0]):
                return SolutionSet((x[0],), (residual,), starts_used=1)
            raise SolverExhaustedError(f"无自由变量且偏移点残差 {residual:.3e} 不满足约束",
                                       {'residual': residual})

        total = setting('SOLVER_START_FACTOR') * bound
        raw_chunk = (setting('SOLVER_PURE_CHUNK') * d if system.mode == 'pure'
                     else setting('SOLVER_MIXED_CHUNK') * bound)
        chunk = 2 ** int(ceil(log2(max(2, min(raw_chunk, total)))))
        radius = 1.05 * BlochVector.ball_radius(d)
        engine = qmc.Sobol(d=n, scramble=True, seed=seed)

        points = np.zeros((0, n))
        residuals = np.zeros(0)
        used = 0
        while used < total:
            starts = radius * _cube_to_ball(2.0 * engine.random(chunk) - 1.0)
            used += chunk
            x, res = cls._levenberg_marquardt(system, starts, setting('SOLVER_MAX_ITER'), tau_sol)
            converged = res < tau_sol
            points = np.vstack([points, x[converged]])
            residuals = np.concatenate([residuals, res[converged]])
            points, residuals = cls._deduplicate(points, residuals, setting('TAU_DEDUP'))
            if len(points) >= target:
                break

        if len(points):
            points, residuals = cls._levenberg_marquardt(system, points, setting('SOLVER_POLISH_ITER'),
                                                         tau_sol * 1e-3)
            keep = [i for i in range(len(points))
                    if residuals[i] < tau_sol and cls._is_positive(system, points[i])]
            points, residuals = cls._deduplicate(points[keep], residuals[keep], setting('TAU_DEDUP'))

        if not len(points):
            raise SolverExhaustedError(
                f"{used} 个起点均未收敛到可容许解，请增大 QEX_SOLVER_START_FACTOR",
                {'starts': used, 'mode': system.mode}
            )

        truncated = len(points) > bound
        if truncated:
            logger.warning(f"解的个数 {len(points)} 超过 Bézout 上界 {bound}，截断")
            points, residuals = points[:bound], residuals[:bound]
        if (system.mode == 'pure' and len(points) < target) or (system.mode == 'mixed' and len(points) < 2):
            logger.warning(f"解的个数 {len(points)} 偏少 (mode={system.mode}, d={d})")

        logger.info(f"约束方程组求解完成: {system.mode}, 未知数 {n}, 解 {len(points)} 个, 起点 {used} 个")
        return SolutionSet(tuple(points), tuple(residuals), starts_used=used, truncated=truncated)

    @staticmethod
    def _levenberg_marquardt(system, x, max_iter, tolerance):
        """批量 LM 迭代；返回 (x, max|r|)"""
        x = np.array(x, dtype=float)
        S, n = x.shape
        r = system.residual_map(x)
        cost = 0.5 * np.sum(r * r, axis=1)
        res = np.abs(r).max(axis=1)
        mu = np.full(S, 1e-3)
        active = res > tolerance
        identity = np.eye(n)

        for _ in range(max_iter):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            J = system.jacobian_map(x[idx])
            g = np.einsum('smn,sm->sn', J, r[idx])
            A = np.einsum('smn,smk->snk', J, J) + mu[idx, None, None] * identity
            step = -np.linalg.solve(A, g[:, :, None])[:, :, 0]
            trial = x[idx] + step
            trial_r = system.residual_map(trial)
            trial_cost = 0.5 * np.sum(trial_r * trial_r, axis=1)

            better = trial_cost < cost[idx]
            accepted = idx[better]
            x[accepted] = trial[better]
            r[accepted] = trial_r[better]
            cost[accepted] = trial_cost[better]
            res[accepted] = np.abs(trial_r[better]).max(axis=1)
            mu[accepted] = np.maximum(mu[accepted] / 3.0, 1e-12)
            mu[idx[~better]] *= 4.0
            active[idx] = (res[idx] > tolerance) & (mu[idx] < 1e10)
        return x, res

    @staticmethod
    def _deduplicate(points, residuals, tolerance):
        """规范排序（字典序）后合并距离 ≤ tolerance 的点，保留残差较小者"""
        if not len(points):
            return points, residuals
        order = np.lexsort(points.T[::-1])
        kept_points, kept_res = [], []
        for i in order:
            for slot, existing in enumerate(kept_points):
                if np.linalg.norm(points[i] - existing) <= tolerance:
                    if residuals[i] < kept_res[slot]:
                        kept_points[slot], kept_res[slot] = points[i], residuals[i]
                    break
            else:
                kept_points.append(points[i])
                kept_res.append(residuals[i])
        merged = np.array(kept_points)
        merged_res = np.array(kept_res)
        order = np.lexsort(merged.T[::-1])
        return merged[order], merged_res[order]

    @staticmethod
    def _is_positive(system, x):
        """Cholesky 判定 ρ̂ + τ_psd Î 正定"""
        rho = SuAlgebraService.density_from_bloch(system.bloch(x))
        rho = 0.5 * (rho + rho.conj().T)
        try:
            np.linalg.cholesky(rho + setting('TAU_PSD') * np.eye(system.d))
            return True
        except np.linalg.LinAlgError:
            return False

    @staticmethod
    def density(system, x):
        return SuAlgebraService.density_from_bloch(system.bloch(x))
