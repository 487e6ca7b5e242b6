from itertools import permutations
import logging

import numpy as np

from app.config import setting
from app.models.oracle import OracleSpectrum
from app.utils.errors import DimensionError, NonHermitianError, OracleNonConvergenceError, ValidationError

logger = logging.getLogger(__name__)


class OracleService:
    """
    独立校验：实嵌入形式上的循环 Jacobi 本征求解与置换枚举

    只用于测试与 --verify，不参与主流程的数值计算。
    """

    @staticmethod
    def _rotate(S, V, p, q):
        """消去 S[p, q] 的一次 Jacobi 旋转（原地）"""
        theta = (S[q, q] - S[p, p]) / (2.0 * S[p, q])
        t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0.0 else 1.0
        c = 1.0 / np.sqrt(t * t + 1.0)
        s = t * c

        column_p = S[:, p].copy()
        column_q = S[:, q].copy()
        S[:, p] = c * column_p - s * column_q
        S[:, q] = s * column_p + c * column_q
        row_p = S[p, :].copy()
        row_q = S[q, :].copy()
        S[p, :] = c * row_p - s * row_q
        S[q, :] = s * row_p + c * row_q
        S[p, q] = S[q, p] = 0.0

        vector_p = V[:, p].copy()
        vector_q = V[:, q].copy()
        V[:, p] = c * vector_p - s * vector_q
        V[:, q] = s * vector_p + c * vector_q

    @classmethod
    def _jacobi(cls, S):
        n = S.shape[0]
        V = np.eye(n)
        scale = max(float(np.linalg.norm(S)), 1e-300)
        tiny = 1e-18 * scale
        max_sweeps = setting('ORACLE_MAX_SWEEPS')
        for sweep in range(1, max_sweeps + 1):
            off = float(np.sqrt(np.sum(np.triu(S, 1) ** 2)))
            if off < 1e-15 * scale:
                return S, V, sweep - 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    if abs(S[p, q]) <= tiny:
                        S[p, q] = S[q, p] = 0.0
                    else:
                        cls._rotate(S, V, p, q)
        off = float(np.sqrt(np.sum(np.triu(S, 1) ** 2)))
        if off < 1e-15 * scale:
            return S, V, max_sweeps
        raise OracleNonConvergenceError(
            f"Jacobi 迭代 {max_sweeps} 轮未收敛，非对角范数 {off:.3e}", {'off_diagonal': off}
        )

    @staticmethod
    def _orthonormal_pick(vectors, count):
        """选主元复 Gram–Schmidt：每次取剩余范数最大的候选"""
        chosen = []
        remaining = [v.copy() for v in vectors]
        for _ in range(count):
            norms = [np.linalg.norm(v) for v in remaining]
            best = int(np.argmax(norms))
            v = remaining.pop(best) / norms[best]
            chosen.append(v)
            remaining = [w - np.vdot(v, w) * v for w in remaining]
        return chosen

    @classmethod
    def eigen_oracle(cls, M) -> OracleSpectrum:
        """
        厄米矩阵的本征分解

        H = A + iB 嵌入为实对称 [[A, −B], [B, A]]，每个本征值出现两次；
        对应向量 (x, y) 给出复向量 x + iy。
        """
        H = np.asarray(M, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise DimensionError(f"矩阵必须是方阵，实际形状 {H.shape}")
        d = H.shape[0]
        norm = float(np.linalg.norm(H, np.inf))
        deviation = float(np.abs(H - H.conj().T).max())
        if deviation > setting('TAU_HERM_REL') * max(norm, 1.0):
            raise NonHermitianError(f"矩阵非厄米，偏差 {deviation:.3e}", {'deviation': deviation})
        H = 0.5 * (H + H.conj().T)

        A, B = H.real, H.imag
        S = np.block([[A, -B], [B, A]])
        S, V, sweeps = cls._jacobi(S)

        values = np.diag(S)
        order = np.argsort(-values, kind='stable')
        vectors = [V[:d, i] + 1j * V[d:, i] for i in order]
        values = values[order]

        # 实嵌入中每个本征值成对出现，按簇取一半的正交向量
        cluster_tol = 1e-9 * max(1.0, norm)
        picked = []
        start = 0
        while start < 2 * d:
            end = start + 1
            while end < 2 * d and values[start] - values[end] <= cluster_tol:
                end += 1
            picked.extend(cls._orthonormal_pick(vectors[start:end], (end - start) // 2))
            start = end

        U = np.column_stack(picked[:d])
        eigenvalues = np.real(np.einsum('ak,ab,bk->k', U.conj(), H, U))
        residual = float(np.abs(H @ U - U * eigenvalues[None, :]).max())
        logger.info(f"Jacobi 本征分解完成: d={d}, {sweeps} 轮, 残差 {residual:.3e}")
        return OracleSpectrum(eigenvalues, U, residual, sweeps)

    @staticmethod
    def _check_spectra(h_spec, rho_spec):
        h_spec = np.sort(np.asarray(h_spec, dtype=float))[::-1]
        rho_spec = np.sort(np.asarray(rho_spec, dtype=float))[::-1]
        if h_spec.shape != rho_spec.shape:
            raise DimensionError(f"谱长度不一致: {h_spec.shape} 与 {rho_spec.shape}")
        return h_spec, rho_spec

    @classmethod
    def trace_bounds(cls, h_spec, rho_spec):
        """Σ ε_{d−i+1} γ_i ≤ Tr(Ĥρ̂) ≤ Σ ε_i γ_i"""
        h_spec, rho_spec = cls._check_spectra(h_spec, rho_spec)
        if abs(rho_spec.sum() - 1.0) > 1e-10:
            raise ValidationError(f"ρ̂ 的谱之和 {rho_spec.sum():.12g} 不为 1")
        return float(np.dot(h_spec[::-1], rho_spec)), float(np.dot(h_spec, rho_spec))

    @classmethod
    def permutation_means(cls, h_spec, rho_spec, tolerance=1e-12):
        """ρ̂ 谱的全部排列与 Ĥ 谱的点积，相等者合并，升序"""
        h_spec, rho_spec = cls._check_spectra(h_spec, rho_spec)
        means = sorted(float(np.dot(h_spec, perm)) for perm in set(permutations(rho_spec.tolist())))
        merged = []
        for value in means:
            if not merged or value - merged[-1] > tolerance:
                merged.append(value)
        return tuple(merged)
