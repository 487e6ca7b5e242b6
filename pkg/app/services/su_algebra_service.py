from functools import lru_cache
import logging

import numpy as np

from app.config import setting
from app.models.algebra import BlochVector, GeneratorBasis, HermitianOperator, PurityClass, StructureTensor
from app.utils.errors import (BasisError, DimensionError, InadmissibleConstraintsError, NonHermitianError,
                              NonUnitaryError)

logger = logging.getLogger(__name__)

MIN_DIMENSION = 2
MAX_DIMENSION = 6


class SuAlgebraService:
    """su(d) 生成元、结构常数与 Bloch 坐标变换"""

    @staticmethod
    def check_dimension(d):
        if not isinstance(d, (int, np.integer)) or not MIN_DIMENSION <= d <= MAX_DIMENSION:
            raise DimensionError(f"维度 d={d} 超出支持范围 [{MIN_DIMENSION}, {MAX_DIMENSION}]",
                                 {'d': d})
        return int(d)

    @classmethod
    def build_generators(cls, d) -> GeneratorBasis:
        """
        广义 Gell-Mann 矩阵

        顺序：对称块 P_jk + P_kj，反对称块 −i(P_jk − P_kj)，二者的 (j, k) 按字典序；
        最后是对角块 √(2/(l(l+1)))(P_11 + … + P_ll − l·P_{l+1,l+1})。
        """
        return _cached_generators(cls.check_dimension(d))

    @classmethod
    def build_structure_tensor(cls, basis: GeneratorBasis) -> StructureTensor:
        return _cached_structure_tensor(cls.check_dimension(basis.d))

    @staticmethod
    def hermiticity_tolerance(matrix):
        return setting('TAU_HERM_REL') * float(np.linalg.norm(matrix, np.inf))

    @classmethod
    def decompose(cls, matrix, name='') -> HermitianOperator:
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"矩阵必须是方阵，实际形状 {matrix.shape}")
        d = cls.check_dimension(matrix.shape[0])

        deviation = np.abs(matrix - matrix.conj().T)
        tolerance = cls.hermiticity_tolerance(matrix)
        if deviation.max() > tolerance:
            j, k = np.unravel_index(int(np.argmax(deviation)), deviation.shape)
            raise NonHermitianError(
                f"矩阵非厄米: 元素 ({j + 1},{k + 1}) 偏差 {deviation[j, k]:.3e} 超过容差 {tolerance:.3e}",
                {'entry': [int(j) + 1, int(k) + 1], 'deviation': float(deviation[j, k])}
            )

        symmetric = 0.5 * (matrix + matrix.conj().T)
        generators = cls.build_generators(d).matrices
        h0 = float(np.trace(symmetric).real)
        h = np.einsum('ab,kba->k', symmetric, generators).real
        return HermitianOperator(d, h0, h, name)

    @classmethod
    def reconstruct(cls, op: HermitianOperator):
        generators = cls.build_generators(op.d).matrices
        return (op.h0 / op.d) * np.eye(op.d) + 0.5 * np.einsum('k,kab->ab', op.h, generators)

    @classmethod
    def density_from_bloch(cls, bloch):
        """ρ̂ = Î/d + ½ Σ λ_k λ̂_k"""
        values = bloch.values if isinstance(bloch, BlochVector) else np.asarray(bloch, dtype=float)
        d = int(round(np.sqrt(values.shape[-1] + 1)))
        generators = cls.build_generators(d).matrices
        return np.eye(d) / d + 0.5 * np.einsum('...k,kab->...ab', values, generators)

    @classmethod
    def bloch_from_density(cls, rho, purity_class=PurityClass.UNCONSTRAINED) -> BlochVector:
        op = cls.decompose(rho)
        bloch = BlochVector(op.d, op.h, purity_class)
        if not bloch.within_ball():
            raise InadmissibleConstraintsError(
                f"Bloch 向量模 {bloch.norm:.6g} 超出球半径 {BlochVector.ball_radius(op.d):.6g}",
                {'violated': '|lambda|<=sqrt(2(d-1)/d)', 'norm': float(bloch.norm)})
        return bloch

    @classmethod
    def adjoint_rotation(cls, unitary, basis: GeneratorBasis):
        """O_kj = ½ Tr(λ̂_k U λ̂_j U†)"""
        unitary = np.asarray(unitary, dtype=complex)
        if unitary.shape != (basis.d, basis.d):
            raise DimensionError(f"U 的形状 {unitary.shape} 与 d={basis.d} 不符")
        defect = np.abs(unitary @ unitary.conj().T - np.eye(basis.d)).max()
        if defect > setting('TAU_UNITARY') * basis.d:
            raise NonUnitaryError(f"U 非幺正: ‖UU†−I‖ = {defect:.3e}", {'defect': float(defect)})

        L = basis.matrices
        conjugated = np.einsum('ab,jbc,cd->jad', unitary, L, unitary.conj().T)
        return 0.5 * np.einsum('kda,jad->kj', L, conjugated).real

    @staticmethod
    def multiplication_law_residual(basis: GeneratorBasis, tensor: StructureTensor):
        """max_jk ‖λ̂_jλ̂_k − [(2/d)δ_jk Î + Σ_q (d_jkq + i f_jkq) λ̂_q]‖_∞"""
        L = basis.matrices
        d = basis.d
        products = np.einsum('jab,kbc->jkac', L, L)
        expansion = np.einsum('jkq,qab->jkab', tensor.dsym + 1j * tensor.f, L)
        identity = (2.0 / d) * np.einsum('jk,ab->jkab', np.eye(len(L)), np.eye(d))
        return float(np.abs(products - identity - expansion).max())


@lru_cache(maxsize=None)
def _cached_generators(d) -> GeneratorBasis:
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    matrices = []
    for j, k in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[j, k] = m[k, j] = 1.0
        matrices.append(m)
    for j, k in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[j, k] = -1j
        m[k, j] = 1j
        matrices.append(m)
    for l in range(1, d):
        diagonal = np.zeros(d)
        diagonal[:l] = 1.0
        diagonal[l] = -float(l)
        matrices.append(np.diag(np.sqrt(2.0 / (l * (l + 1))) * diagonal).astype(complex))
    logger.info(f"su({d}) 生成元构建完成: {len(matrices)} 个")
    return GeneratorBasis(d, np.array(matrices))


@lru_cache(maxsize=None)
def _cached_structure_tensor(d) -> StructureTensor:
    L = _cached_generators(d).matrices
    # T_jkq = Tr(λ̂_j λ̂_k λ̂_q)
    triple = np.einsum('jab,kbc,qca->jkq', L, L, L)
    swapped = triple.transpose(1, 0, 2)
    f_complex = (triple - swapped) / 4j
    d_complex = (triple + swapped) / 4.0

    imaginary = max(np.abs(f_complex.imag).max(), np.abs(d_complex.imag).max())
    if imaginary > 1e-10:
        raise BasisError(f"结构常数虚部 {imaginary:.3e} 超过容差，生成元基不正确")

    threshold = setting('TAU_STRUCT')
    f = np.where(np.abs(f_complex.real) < threshold, 0.0, f_complex.real)
    dsym = np.where(np.abs(d_complex.real) < threshold, 0.0, d_complex.real)

    # 全反对称化 / 全对称化，最后一步保证 f_jkq = −f_kjq 逐位精确
    f = (f + f.transpose(1, 2, 0) + f.transpose(2, 0, 1)) / 3.0
    f = (f - f.transpose(1, 0, 2)) / 2.0
    dsym = (dsym + dsym.transpose(1, 2, 0) + dsym.transpose(2, 0, 1)
            + dsym.transpose(1, 0, 2) + dsym.transpose(0, 2, 1) + dsym.transpose(2, 1, 0)) / 6.0
    logger.info(f"su({d}) 结构常数构建完成: f 非零 {int(np.count_nonzero(f))} 项")
    return StructureTensor(d, f, dsym)
