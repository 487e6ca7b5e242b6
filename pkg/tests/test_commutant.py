# test_commutant.py
import pytest
import numpy as np

from app.services.commutant_service import CommutantService
from app.services.su_algebra_service import SuAlgebraService
from app.utils.errors import DimensionError, SolverExhaustedError
from tests.conftest import random_hermitian


def rank_of(op):
    return CommutantService.critical_parametrization(op).r


@pytest.mark.parametrize('diagonal, expected', [
    ([4, 3, 2, 1], 12),
    ([2, 2, 1, 0], 10),
    ([1, 1, 0, 0], 8),
    ([5, 5, 5, 1], 6),
    ([1, 1, 1, 1], 0),
])
def test_rank_of_diagonal_operators(diagonal, expected):
    """测试 r = d² − Σ m_i²"""
    op = SuAlgebraService.decompose(np.diag(diagonal).astype(complex))
    param = CommutantService.critical_parametrization(op)

    assert param.r == expected
    assert param.n == 15 - expected
    assert len(param.bound_indices) == expected


@pytest.mark.parametrize('name, overrides, expected', [
    ('qubit_generic', {}, 2),
    ('bec_qutrit', {}, 6),
    ('degenerate_qutrit', {}, 4),
    ('quartit', {}, 12),
    ('quartit', {'delta': 0}, 8),
])
def test_rank_of_fixtures(load_operator, name, overrides, expected):
    """测试内置算符的对易子秩"""
    assert rank_of(load_operator(name, **overrides)) == expected


def test_gram_matrix_rank_matches(rng):
    """测试 G = 4MMᵀ 与 M 同秩"""
    for d in (3, 4):
        op = SuAlgebraService.decompose(random_hermitian(rng, d))
        tensor = SuAlgebraService.build_structure_tensor(SuAlgebraService.build_generators(d))
        M = CommutantService.build_commutant(op, tensor).matrix
        G = CommutantService.gram_matrix(op, tensor)

        assert np.allclose(G, G.T, atol=1e-12)
        assert np.linalg.matrix_rank(G, tol=1e-9) == np.linalg.matrix_rank(M, tol=1e-9) == d * (d - 1)


def test_commutant_antisymmetric(load_operator):
    """测试 M 反对称"""
    cm = CommutantService.commutant_of(load_operator('bec_qutrit'))
    assert np.allclose(cm.matrix, -cm.matrix.T, atol=1e-14)


def test_commutant_dimension_mismatch(load_operator):
    """测试算符与结构常数维度不一致"""
    tensor = SuAlgebraService.build_structure_tensor(SuAlgebraService.build_generators(4))
    with pytest.raises(DimensionError):
        CommutantService.build_commutant(load_operator('bec_qutrit'), tensor)


def test_kernel_basis(rng):
    """测试核空间基满足 M·basis = 0，且 h 本身落在核空间中"""
    for d in range(2, 6):
        op = SuAlgebraService.decompose(random_hermitian(rng, d))
        cm = CommutantService.commutant_of(op)
        param = CommutantService.rank_and_nullspace(cm)

        assert param.n == d - 1
        assert np.abs(cm.matrix @ param.basis).max() < 1e-9 * max(cm.norm, 1.0)
        assert np.allclose(param.basis[list(param.free_indices)], np.eye(param.n))
        h_free = op.h[list(param.free_indices)]
        assert np.allclose(param.expand(h_free), op.h, atol=1e-9)


def test_expressing_map_is_one_based_in_export(load_operator):
    """测试导出的自由/约束下标从 1 开始"""
    param = CommutantService.critical_parametrization(load_operator('bec_qutrit'))
    exported = param.to_dict()

    assert exported['r'] == 6 and exported['n'] == 2
    assert sorted(exported['free_indices'] + exported['bound_indices']) == list(range(1, 9))
    assert set(param.expressing_map) == set(param.bound_indices)


def test_restrict_orthogonal(load_operator):
    """测试正交约束后每个参数点都满足 λ·λ_k = −2/d"""
    op = load_operator('bec_qutrit')
    param = CommutantService.critical_parametrization(op)
    H = SuAlgebraService.reconstruct(op)
    _, vectors = np.linalg.eigh(H)
    projector = SuAlgebraService.bloch_from_density(np.outer(vectors[:, 0], vectors[:, 0].conj())).values

    restricted = CommutantService.restrict_orthogonal(param, [projector])

    assert restricted.n == param.n - 1
    for x in (np.zeros(restricted.n), np.ones(restricted.n), -2.5 * np.ones(restricted.n)):
        assert np.dot(restricted.expand(x), projector) == pytest.approx(-2.0 / 3, abs=1e-10)


def test_restrict_orthogonal_without_projectors(load_operator):
    """测试空约束原样返回"""
    param = CommutantService.critical_parametrization(load_operator('bec_qutrit'))
    assert CommutantService.restrict_orthogonal(param, []) is param


def test_restrict_orthogonal_inconsistent(load_operator):
    """测试不相容的正交约束"""
    param = CommutantService.critical_parametrization(load_operator('qubit_generic'))
    # 同一投影的两个相反约束
    direction = load_operator('qubit_generic').h / load_operator('qubit_generic').bloch_norm
    with pytest.raises(SolverExhaustedError):
        CommutantService.restrict_orthogonal(param, [direction, -direction])


def test_free_preference():
    """测试自由变量偏好顺序"""
    assert CommutantService.free_preference(3) == [7, 6, 5, 4, 3, 2, 1, 0]
    assert CommutantService.free_preference(2) == [2, 1, 0]


def test_gauss_jordan_pivots():
    """测试按列自然顺序选主元"""
    assert CommutantService.gauss_jordan_pivots([[1, 2, 3], [2, 4, 7]], 1e-12) == [0, 2]
    assert CommutantService.gauss_jordan_pivots(np.zeros((2, 2)), 1e-12) == []


@pytest.mark.parametrize('r, d, patterns', [
    (0, 3, ((3,),)),
    (4, 3, ((2, 1),)),
    (6, 3, ((1, 1, 1),)),
    (8, 4, ((2, 2),)),
    (18, 6, ((4, 1, 1), (3, 3))),
])
def test_classify_orbit(r, d, patterns):
    """测试按秩匹配简并模式"""
    orbit = CommutantService.classify_orbit(r, d)

    assert orbit.degeneracy_patterns == patterns
    assert orbit.is_nondegenerate == (r == d * (d - 1))


def test_classify_orbit_labels():
    """测试轨道标签"""
    assert CommutantService.classify_orbit(0, 3).labels == ('point',)
    assert CommutantService.classify_orbit(4, 3).labels == ('diag(α,α,β)',)


@pytest.mark.parametrize('r, d', [(3, 3), (2, 3), (14, 4)])
def test_classify_orbit_rejects(r, d):
    """测试奇数秩、越界秩与无对应模式的秩"""
    with pytest.raises(DimensionError):
        CommutantService.classify_orbit(r, d)
