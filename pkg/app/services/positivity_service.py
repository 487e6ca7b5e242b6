from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from itertools import combinations, product
from math import comb
import logging

import numpy as np
from scipy.linalg import lapack

from app.config import bind_app_context, setting
from app.models.positivity import (AdmissibilityResult, AdmissibilityStatus, BezoutianMatrix,
                                   PurityConstraints, TraceVector)
from app.utils.errors import DimensionError

logger = logging.getLogger(__name__)


class PositivityService:
    """Newton–Girard 系数、纯度上界、幂和与 Bezoutian 可容许性判定"""

    @staticmethod
    def newton_girard_coeffs(t: TraceVector):
        """
        幂和 → 特征多项式系数

        a_0 = a_1 = 1，a_k = (1/k) Σ_{j=1}^{k} (−1)^{j−1} a_{k−j} t_j。

        Returns:
            np.ndarray: (a_2, …, a_d)
        """
        d = t.d
        if len(t.t) < d:
            raise DimensionError(f"幂和长度 {len(t.t)} 小于 d={d}")
        a = [1.0]
        for k in range(1, d + 1):
            total = 0.0
            for j in range(1, k + 1):
                total += (-1) ** (j - 1) * a[k - j] * t.power(j)
            a.append(total / k)
        return np.array(a[2:])

    @staticmethod
    def purity_upper_bound(d, k):
        if not 2 <= k <= d:
            raise DimensionError(f"下标 k={k} 超出范围 [2, {d}]")
        return comb(d, k) / d ** k

    @staticmethod
    def traces_from_constants(c: PurityConstraints) -> TraceVector:
        """
        常数 → 幂和 t_1 … t_{2(d−1)}

        k ≤ d 时 t_k = Σ_{p=1}^{k−1} (−1)^{p+1} c_p t_{k−p} + (−1)^{k+1} k c_k；
        k > d 时按 Cayley–Hamilton 递推。
        """
        d = c.d
        e = (1.0, 1.0) + c.c
        t = [float(d)]
        for k in range(1, max(2 * (d - 1), d) + 1):
            total = sum((-1) ** (p + 1) * e[p] * t[k - p] for p in range(1, min(k - 1, d) + 1))
            if k <= d:
                total += (-1) ** (k + 1) * k * e[k]
            t.append(total)
        return TraceVector(d, np.array(t[1:2 * (d - 1) + 1]))

    @staticmethod
    def traces_of_state(rho, count=None) -> TraceVector:
        rho = np.asarray(rho, dtype=complex)
        d = rho.shape[0]
        count = count or max(2 * (d - 1), d)
        power = np.eye(d, dtype=complex)
        t = []
        for _ in range(count):
            power = power @ rho
            t.append(float(np.trace(power).real))
        return TraceVector(d, np.array(t))

    @classmethod
    def constants_of_state(cls, rho) -> PurityConstraints:
        """态的纯度常数（Newton–Girard 作用于 Tr ρ̂^j）"""
        t = cls.traces_of_state(rho)
        return PurityConstraints(t.d, tuple(cls.newton_girard_coeffs(t)))

    @staticmethod
    def bezoutian(t: TraceVector) -> BezoutianMatrix:
        """B[i][j] = t_{i+j}，t_0 = d"""
        d = t.d
        if len(t.t) < 2 * (d - 1):
            raise DimensionError(f"幂和长度 {len(t.t)} 不足 2(d−1) = {2 * (d - 1)}")
        B = np.array([[t.power(i + j) for j in range(d)] for i in range(d)])
        return BezoutianMatrix(d, B)

    @classmethod
    def degeneracy_indicator(cls, t: TraceVector):
        return cls.bezoutian(t).determinant

    @staticmethod
    def bezoutian_minor_sums(B: BezoutianMatrix):
        """
        B 的谱的初等对称函数 e_1 … e_d，即各阶主子式之和

        Returns:
            list of (value, scale)：scale 为主子式绝对值之和，用于边界带宽
        """
        matrix = B.matrix
        sums = []
        for k in range(1, B.d + 1):
            minors = [np.linalg.det(matrix[np.ix_(rows, rows)]) for rows in combinations(range(B.d), k)]
            sums.append((float(np.sum(minors)), float(np.sum(np.abs(minors)))))
        return sums

    @classmethod
    def is_admissible(cls, c: PurityConstraints, tau=None) -> AdmissibilityResult:
        """tau 缺省取 TAU_BEZ；容差是缓存键的一部分"""
        return _cached_admissibility(c, float(setting('TAU_BEZ') if tau is None else tau))

    @classmethod
    def evaluate_conditions(cls, c: PurityConstraints, tau=None):
        """
        按维度给出 (名称, 值, 尺度) 列表；值 ≥ 0 为满足

        d=2: 1 − 4c_2；d=3: 判别式三次式；d=4: B_4 谱的 e_1 … e_4（e_4 = det B_4）；
        d ≥ 5 由 _psd_condition 处理。
        """
        d = c.d
        if d == 2:
            (c2,) = c.c
            return [('1-4c2>=0', 1.0 - 4.0 * c2, max(1.0, 4.0 * abs(c2)))]
        if d == 3:
            c2, c3 = c.c
            terms = [c2 ** 2, -4.0 * c2 ** 3, 18.0 * c2 * c3, -4.0 * c3, -27.0 * c3 ** 2]
            return [('c2^2-4c2^3+18c2c3-c3(4+27c3)>=0', float(np.sum(terms)),
                     float(np.sum(np.abs(terms))))]
        if d == 4:
            B = cls.bezoutian(cls.traces_from_constants(c))
            names = ['trace(B4)>=0', 'e2(B4)>=0', 'e3(B4)>=0', 'det(B4)>=0']
            return [(name, value, scale)
                    for name, (value, scale) in zip(names, cls.bezoutian_minor_sums(B))]
        return [cls._psd_condition(c, tau)]

    @classmethod
    def _psd_condition(cls, c: PurityConstraints, tau=None):
        """d ≥ 5：选主元 Cholesky 求秩，再检查剩余 Schur 补"""
        B = cls.bezoutian(cls.traces_from_constants(c)).matrix
        scale = max(1.0, float(np.abs(B).max()))
        tolerance = (setting('TAU_BEZ') if tau is None else tau) * scale
        factor, piv, rank, info = lapack.dpstrf(B, tol=tolerance, lower=0)
        if info < 0:
            raise DimensionError(f"dpstrf 参数错误 info={info}")
        order = piv - 1
        permuted = B[np.ix_(order, order)]
        upper = np.triu(factor[:rank, :rank])
        if rank == B.shape[0]:
            value = float(np.min(np.diag(upper)) ** 2)
        else:
            # S = A22 − A21 A11^{-1} A12，A11 = UᵀU
            coupling = np.linalg.solve(upper.T, permuted[:rank, rank:]) if rank else np.zeros((0, B.shape[0]))
            schur = permuted[rank:, rank:] - coupling.T @ coupling
            value = float(np.linalg.eigvalsh(0.5 * (schur + schur.T)).min())
        return (f'psd(B{c.d})', value, scale)

    @classmethod
    def region_rows(cls, d, resolution):
        """
        可容许区域网格采样

        Returns:
            list of dict: c2, c3[, c4], status, active
        """
        if d not in (3, 4):
            raise DimensionError(f"区域采样只支持 d ∈ {{3, 4}}，实际 d={d}")
        if resolution < 2:
            raise DimensionError("网格分辨率至少为 2")
        axes = [np.linspace(0.0, cls.purity_upper_bound(d, k), resolution) for k in range(2, d + 1)]
        points = list(product(*axes))

        def classify(point):
            result = cls.is_admissible(PurityConstraints(d, point))
            row = {f'c{k}': float(v) for k, v in enumerate(point, start=2)}
            row['status'] = result.status.value
            row['active'] = ';'.join(result.active_conditions)
            return row

        with ThreadPoolExecutor(max_workers=max(1, setting('QEX_THREADS'))) as executor:
            rows = list(executor.map(bind_app_context(classify), points, chunksize=256))
        logger.info(f"区域采样完成: d={d}, {len(rows)} 个点")
        return rows


@lru_cache(maxsize=65536)
def _cached_admissibility(c: PurityConstraints, tau) -> AdmissibilityResult:
    d = c.d

    for k, value in enumerate(c.c, start=2):
        bound = PositivityService.purity_upper_bound(d, k)
        if value < -tau or value > bound + tau:
            return AdmissibilityResult(
                AdmissibilityStatus.INADMISSIBLE,
                violated_condition=f'0<=c{k}<={bound:.12g}',
                values=((f'c{k}', float(value)),)
            )

    conditions = PositivityService.evaluate_conditions(c, tau)
    values = tuple((name, float(value)) for name, value, _ in conditions)

    # 纯态顶点与最大混合顶点上 det B_d = 0，但二者都是合法状态
    if all(abs(v) <= tau for v in c.c) or c.is_maximally_mixed(tau):
        return AdmissibilityResult(AdmissibilityStatus.ADMISSIBLE, values=values)

    active = []
    for name, value, scale in conditions:
        band = tau * max(1.0, scale)
        if value < -band:
            return AdmissibilityResult(AdmissibilityStatus.INADMISSIBLE, violated_condition=name,
                                       active_conditions=(name,), values=values)
        if abs(value) <= band:
            active.append(name)
    status = AdmissibilityStatus.BOUNDARY if active else AdmissibilityStatus.ADMISSIBLE
    return AdmissibilityResult(status, active_conditions=tuple(active), values=values)
