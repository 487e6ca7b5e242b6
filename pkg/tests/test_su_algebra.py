# test_su_algebra.py
import pytest
import numpy as np
from scipy.linalg import expm
from scipy.stats import unitary_group

from app.models.algebra import PurityClass
from app.services.su_algebra_service import SuAlgebraService
from app.utils.errors import DimensionError, InadmissibleConstraintsError, NonHermitianError, NonUnitaryError
from tests.conftest import random_hermitian, random_state

DEGENERATE = np.array([
    [2, -1 + 1j, -1 - 1j / 3],
    [-1 - 1j, 13 / 3, 1 + 2j],
    [-1 + 1j / 3, 1 - 2j, 3]
])


@pytest.mark.parametrize('d', range(2, 7))
def test_generators_orthonormal(d):
    """测试生成元无迹、厄米且 Tr(λ_jλ_k) = 2δ_jk"""
    basis = SuAlgebraService.build_generators(d)
    L = basis.matrices

    assert basis.size == d * d - 1
    assert len(L) == d * d - 1
    assert np.allclose(np.trace(L, axis1=1, axis2=2), 0.0, atol=1e-15)
    assert np.allclose(L, L.conj().transpose(0, 2, 1), atol=0)
    gram = np.einsum('jab,kba->jk', L, L).real
    assert np.allclose(gram, 2.0 * np.eye(d * d - 1), atol=1e-14)
    assert basis.diagonal_indices == tuple(range(d * (d - 1), d * d - 1))


@pytest.mark.parametrize('d', range(2, 7))
def test_multiplication_law(d):
    """测试乘法律残差 < 1e-12，f 逐位反对称，dsym 对称"""
    basis = SuAlgebraService.build_generators(d)
    tensor = SuAlgebraService.build_structure_tensor(basis)

    assert SuAlgebraService.multiplication_law_residual(basis, tensor) < 1e-12
    assert np.array_equal(tensor.f + tensor.f.transpose(1, 0, 2), np.zeros_like(tensor.f))
    assert np.allclose(tensor.f, tensor.f.transpose(1, 2, 0), atol=1e-14)
    assert np.allclose(tensor.dsym, tensor.dsym.transpose(1, 0, 2), atol=1e-14)


def test_qubit_structure_constants():
    """测试 d=2 时 f_123 = 1，dsym 全为零"""
    tensor = SuAlgebraService.build_structure_tensor(SuAlgebraService.build_generators(2))

    assert tensor.f[0, 1, 2] == pytest.approx(1.0, abs=1e-15)
    assert tensor.f[1, 0, 2] == pytest.approx(-1.0, abs=1e-15)
    assert not np.any(tensor.dsym)
    assert tensor.f_entries[(0, 1, 2)] == pytest.approx(1.0)
    # 导出使用 1 起始下标
    assert tensor.to_dict()['f'][0][:3] == [1, 2, 3]


def test_generator_cache():
    """测试生成元按维度缓存"""
    assert SuAlgebraService.build_generators(4) is SuAlgebraService.build_generators(4)


@pytest.mark.parametrize('d', [1, 7, 2.5])
def test_unsupported_dimension(d):
    """测试不支持的维度"""
    with pytest.raises(DimensionError):
        SuAlgebraService.build_generators(d)


def test_decompose_degenerate_matrix():
    """测试简并 3×3 矩阵的 Bloch 分解"""
    op = SuAlgebraService.decompose(DEGENERATE, 'degenerate')

    expected = [-2, -2, 2, -2, 2 / 3, -4, -7 / 3, np.sqrt(3) / 9]
    assert op.h0 == pytest.approx(28 / 3, abs=1e-13)
    assert np.allclose(op.h, expected, atol=1e-13)
    assert np.allclose(SuAlgebraService.reconstruct(op), DEGENERATE, atol=1e-13)


def test_decompose_random_roundtrip(rng):
    """测试随机厄米矩阵分解后重构"""
    for d in range(2, 7):
        H = random_hermitian(rng, d)
        op = SuAlgebraService.decompose(H)
        assert op.h0 == pytest.approx(np.trace(H).real)
        assert np.allclose(SuAlgebraService.reconstruct(op), H, atol=1e-12)


def test_decompose_rejects_non_hermitian():
    """测试非厄米矩阵被拒绝并报告元素位置"""
    with pytest.raises(NonHermitianError) as info:
        SuAlgebraService.decompose(np.array([[1.0, 1.0], [0.0, 1.0]]))

    assert info.value.exit_code == 2
    assert info.value.details['entry'] in ([1, 2], [2, 1])


def test_decompose_rejects_non_square():
    """测试非方阵被拒绝"""
    with pytest.raises(DimensionError):
        SuAlgebraService.decompose(np.zeros((2, 3)))


def test_density_bloch_roundtrip(rng):
    """测试 ρ̂ ↔ λ 的互逆与 Bloch 球约束"""
    for d in range(2, 6):
        rho = random_state(rng, d)
        bloch = SuAlgebraService.bloch_from_density(rho, PurityClass.MIXED)

        assert bloch.within_ball()
        assert bloch.purity_class == PurityClass.MIXED
        assert np.allclose(SuAlgebraService.density_from_bloch(bloch), rho, atol=1e-12)
        # Tr ρ̂² = 1/d + |λ|²/2
        assert np.trace(rho @ rho).real == pytest.approx(1.0 / d + bloch.norm ** 2 / 2, abs=1e-12)


def test_pure_state_on_ball_surface(rng):
    """测试纯态的 Bloch 向量落在球面上"""
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    v /= np.linalg.norm(v)
    bloch = SuAlgebraService.bloch_from_density(np.outer(v, v.conj()))

    assert bloch.norm == pytest.approx(bloch.ball_radius(4), abs=1e-12)


def test_bloch_outside_ball_rejected():
    """测试 Bloch 球外的矩阵按不可容许处理，而不是维度错误"""
    with pytest.raises(InadmissibleConstraintsError) as info:
        SuAlgebraService.bloch_from_density(np.diag([2.0, -1.0]))

    assert not isinstance(info.value, DimensionError)
    assert info.value.details['norm'] == pytest.approx(3.0)
    assert info.value.exit_code == 2


def test_adjoint_rotation(rng):
    """测试伴随表示：O 正交且把 h 变为 UĤU† 的 Bloch 向量"""
    for d in (2, 3, 4):
        basis = SuAlgebraService.build_generators(d)
        U = unitary_group.rvs(d, random_state=int(rng.integers(1 << 30)))
        H = random_hermitian(rng, d)

        O = SuAlgebraService.adjoint_rotation(U, basis)
        rotated = SuAlgebraService.decompose(U @ H @ U.conj().T)

        assert np.allclose(O @ O.T, np.eye(d * d - 1), atol=1e-12)
        assert np.allclose(O @ SuAlgebraService.decompose(H).h, rotated.h, atol=1e-12)


def test_adjoint_rotation_of_generated_unitary(rng):
    """测试由厄米生成元指数化得到的幺正矩阵"""
    basis = SuAlgebraService.build_generators(3)
    U = expm(1j * random_hermitian(rng, 3))
    O = SuAlgebraService.adjoint_rotation(U, basis)

    assert np.linalg.det(O) == pytest.approx(1.0, abs=1e-10)


def test_adjoint_rotation_rejects_non_unitary():
    """测试非幺正矩阵被拒绝"""
    basis = SuAlgebraService.build_generators(2)
    with pytest.raises(NonUnitaryError):
        SuAlgebraService.adjoint_rotation(np.array([[1.0, 0.1], [0.0, 1.0]]), basis)
