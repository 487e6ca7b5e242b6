import logging

import numpy as np

from app.config import setting
from app.models.algebra import HermitianOperator, StructureTensor
from app.models.commutant import CommutantMatrix, NullSpaceParametrization, OrbitInfo
from app.services.su_algebra_service import SuAlgebraService
from app.utils.errors import DimensionError, SolverExhaustedError

logger = logging.getLogger(__name__)


def _partitions(n, largest=None):
    """n 的整数分拆，分量降序"""
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for part in range(min(n, largest), 0, -1):
        for rest in _partitions(n - part, part):
            yield (part,) + rest


class CommutantService:
    """对易子矩阵 M、核空间参数化与轨道分类"""

    @staticmethod
    def build_commutant(op: HermitianOperator, tensor: StructureTensor) -> CommutantMatrix:
        if op.d != tensor.d:
            raise DimensionError(f"算符维度 d={op.d} 与结构常数维度 d={tensor.d} 不一致")
        matrix = np.einsum('ijk,k->ij', tensor.f, op.h)
        return CommutantMatrix(op.d, matrix, op)

    @classmethod
    def commutant_of(cls, op: HermitianOperator) -> CommutantMatrix:
        basis = SuAlgebraService.build_generators(op.d)
        return cls.build_commutant(op, SuAlgebraService.build_structure_tensor(basis))

    @staticmethod
    def gauss_jordan_pivots(matrix, tolerance):
        """
        部分选主元 Gauss–Jordan 消元，按列的自然顺序选主元

        Returns:
            list: 主元列下标
        """
        A = np.array(matrix, dtype=float)
        rows, cols = A.shape
        pivots = []
        row = 0
        for col in range(cols):
            if row >= rows:
                break
            p = row + int(np.argmax(np.abs(A[row:, col])))
            if abs(A[p, col]) <= tolerance:
                continue
            A[[row, p]] = A[[p, row]]
            A[row] = A[row] / A[row, col]
            others = np.arange(rows) != row
            A[others] -= np.outer(A[others, col], A[row])
            pivots.append(col)
            row += 1
        return pivots

    @staticmethod
    def free_preference(d):
        """自由变量偏好顺序：对角块降序，其后非对角块降序"""
        size = d * d - 1
        first_diagonal = d * (d - 1)
        return list(range(size - 1, first_diagonal - 1, -1)) + list(range(first_diagonal - 1, -1, -1))

    @staticmethod
    def spectral_rank(matrix, tau_rel):
        singular = np.linalg.svd(matrix, compute_uv=False)
        if singular.size == 0 or singular[0] == 0.0:
            return 0, singular, False
        rank = int(np.sum(singular > tau_rel * singular[0]))
        near = False
        if rank and singular[rank - 1] < 10.0 * tau_rel * singular[0]:
            near = True
        if rank < singular.size and singular[rank] > 0.1 * tau_rel * singular[0]:
            near = True
        return rank, singular, near

    @classmethod
    def rank_and_nullspace(cls, cm: CommutantMatrix) -> NullSpaceParametrization:
        M = np.asarray(cm.matrix)
        d = cm.d
        size = d * d - 1
        tau_rank = setting('TAU_RANK_REL')

        r, singular, near = cls.spectral_rank(M, tau_rank)
        if r % 2:
            # 反对称矩阵秩为偶数，奇数说明一对奇异值跨过了阈值
            logger.warning(f"对易子矩阵数值秩 {r} 为奇数，按 {min(r + 1, size)} 处理")
            r = min(r + 1, size)
            near = True

        if r == 0:
            free = list(range(size))
        else:
            pivots = cls.gauss_jordan_pivots(M, tau_rank * singular[0] * size)
            if len(pivots) == r:
                free = [i for i in range(size) if i not in set(pivots)]
            else:
                logger.warning(f"消元主元数 {len(pivots)} 与谱秩 {r} 不一致，改用奇异向量选取自由变量")
                free = cls._free_from_singular_vectors(M, r, cls.free_preference(d))

        free = sorted(free)
        bound = [i for i in range(size) if i not in set(free)]
        basis = np.zeros((size, len(free)))
        basis[free, np.arange(len(free))] = 1.0
        if bound:
            solution, *_ = np.linalg.lstsq(M[:, bound], M[:, free], rcond=None)
            basis[bound, :] = -solution

        param = NullSpaceParametrization(
            d=d, r=r, free_indices=tuple(free), bound_indices=tuple(bound),
            offset=np.zeros(size), basis=basis, near_degenerate=near,
            singular_values=tuple(float(s) for s in singular)
        )
        kernel_residual = float(np.abs(M @ basis).max()) if basis.size else 0.0
        if kernel_residual > setting('TAU_NULL') * max(cm.norm, 1e-300):
            logger.warning(f"核空间残差 {kernel_residual:.3e} 偏大")
        if near:
            logger.warning(f"对易子矩阵接近退化: r={r}")
        logger.info(f"对易子矩阵秩 r={r}，自由变量 {[i + 1 for i in free]}")
        return param

    @staticmethod
    def _free_from_singular_vectors(M, r, preference):
        _, _, vt = np.linalg.svd(M)
        kernel = vt[r:].T
        n = kernel.shape[1]
        free = []
        for index in preference:
            trial = kernel[free + [index], :]
            singular = np.linalg.svd(trial, compute_uv=False)
            if singular[-1] > 1e-8:
                free.append(index)
            if len(free) == n:
                break
        return free

    @classmethod
    def critical_parametrization(cls, op: HermitianOperator) -> NullSpaceParametrization:
        return cls.rank_and_nullspace(cls.commutant_of(op))

    @classmethod
    def restrict_orthogonal(cls, param: NullSpaceParametrization, projectors) -> NullSpaceParametrization:
        """
        在参数化上施加 Tr(ρ̂ρ̂_k) = 0，即 λ·λ_k = −2/d

        约束变量从偏好最低（Bloch 下标最小）的自由变量中选取。
        """
        if not len(projectors):
            return param
        d = param.d
        lambdas = np.array([np.asarray(p, dtype=float) for p in projectors])
        A = lambdas @ param.basis
        b = -2.0 / d - lambdas @ param.offset

        scale = max(1.0, float(np.abs(A).max())) if A.size else 1.0
        pivots = cls.gauss_jordan_pivots(A, 1e-9 * scale) if param.n else []
        kept = [i for i in range(param.n) if i not in set(pivots)]

        x0 = np.zeros(param.n)
        expand = np.zeros((param.n, len(kept)))
        expand[kept, np.arange(len(kept))] = 1.0
        if pivots:
            particular, *_ = np.linalg.lstsq(A[:, pivots], b, rcond=None)
            x0[pivots] = particular
            coupling, *_ = np.linalg.lstsq(A[:, pivots], A[:, kept], rcond=None)
            expand[pivots, :] = -coupling

        inconsistency = float(np.abs(A @ x0 - b).max())
        if inconsistency > 1e-8:
            raise SolverExhaustedError(f"正交约束不相容，残差 {inconsistency:.3e}",
                                       {'inconsistency': inconsistency})

        free = tuple(param.free_indices[i] for i in kept)
        bound = tuple(i for i in range(d * d - 1) if i not in set(free))
        return NullSpaceParametrization(
            d=d, r=param.r, free_indices=free, bound_indices=bound,
            offset=param.offset + param.basis @ x0, basis=param.basis @ expand,
            near_degenerate=param.near_degenerate, singular_values=param.singular_values
        )

    @classmethod
    def gram_matrix(cls, op: HermitianOperator, tensor: StructureTensor):
        """G_qp = 4 Σ f_{q k1 j} f_{p k2 j} h_k1 h_k2 = 4 M Mᵀ"""
        M = cls.build_commutant(op, tensor).matrix
        return 4.0 * M @ M.T

    @staticmethod
    def classify_orbit(r, d) -> OrbitInfo:
        """按 r = d² − Σ m_i² 匹配本征值重数模式"""
        if r % 2 or not 0 <= r <= d * (d - 1):
            raise DimensionError(f"秩 r={r} 对 d={d} 不合法（须为偶数且 0 ≤ r ≤ {d * (d - 1)}）")
        patterns = tuple(p for p in _partitions(d) if d * d - sum(m * m for m in p) == r)
        if not patterns:
            raise DimensionError(f"(d={d}, r={r}) 不对应任何简并模式")
        return OrbitInfo(d=d, r=r, degeneracy_patterns=patterns, is_nondegenerate=(r == d * (d - 1)))
