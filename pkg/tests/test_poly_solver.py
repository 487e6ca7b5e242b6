# test_poly_solver.py
import pytest
import numpy as np

from app.models.positivity import PurityConstraints
from app.services.commutant_service import CommutantService
from app.services.poly_solver_service import PolySolverService
from app.services.su_algebra_service import SuAlgebraService
from app.utils.errors import DimensionError, InadmissibleConstraintsError, SolverExhaustedError

MIXED_QUTRIT = PurityConstraints(3, (29 / 100, 1 / 50))


def system_for(op, constants, fixed_zero=(), **kwargs):
    param = CommutantService.critical_parametrization(op)
    return PolySolverService.build_constraint_system(param, fixed_zero, constants, **kwargs)


def densities(system, solutions):
    return [PolySolverService.density(system, x) for x in solutions.solutions]


def test_count_bound():
    """测试 Bézout 上界 d!"""
    assert PolySolverService.count_bound(2) == 2
    assert PolySolverService.count_bound(4) == 24
    with pytest.raises(DimensionError):
        PolySolverService.count_bound(1)


def test_arity_mismatch(load_operator):
    """测试置零后自由变量个数不等于 d−1"""
    op = load_operator('bec_qutrit')
    param = CommutantService.critical_parametrization(op)

    with pytest.raises(DimensionError):
        PolySolverService.build_constraint_system(param, param.free_indices[:1], MIXED_QUTRIT)
    with pytest.raises(DimensionError):
        PolySolverService.build_constraint_system(param, param.free_indices[:1], PurityConstraints.pure(3))

    relaxed = PolySolverService.build_constraint_system(param, param.free_indices[:1], PurityConstraints.pure(3),
                                                        strict_arity=False)
    assert relaxed.arity == 1


def test_fixed_zero_must_be_free(load_operator):
    """测试置零下标必须是自由变量"""
    param = CommutantService.critical_parametrization(load_operator('bec_qutrit'))
    with pytest.raises(DimensionError):
        PolySolverService.build_constraint_system(param, param.bound_indices[:1], MIXED_QUTRIT)


def test_inadmissible_constants(load_operator):
    """测试不可容许的常数在求解前被拒绝"""
    with pytest.raises(InadmissibleConstraintsError) as info:
        system_for(load_operator('bec_qutrit'), PurityConstraints(3, (0.3, 0.5)))

    assert info.value.details['violated'].startswith('0<=c3<=')
    assert info.value.exit_code == 2


def test_qubit_pure_solutions(load_operator):
    """测试 d=2 纯态解为 ±h/|h|"""
    op = load_operator('qubit_generic')
    system = system_for(op, PurityConstraints.pure(2))
    result = PolySolverService.solve(system)

    assert result.count == 2
    direction = op.h / op.bloch_norm
    blochs = sorted((system.bloch(x) for x in result.solutions), key=lambda v: float(np.dot(v, direction)))
    assert np.allclose(blochs[0], -direction, atol=1e-9)
    assert np.allclose(blochs[1], direction, atol=1e-9)


def test_bec_pure_solutions(load_operator):
    """测试三能级纯态解为三个互相正交的投影"""
    system = system_for(load_operator('bec_qutrit'), PurityConstraints.pure(3))
    result = PolySolverService.solve(system)

    assert result.count == 3
    rhos = densities(system, result)
    for rho in rhos:
        assert np.allclose(rho @ rho, rho, atol=1e-9)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(sum(rhos), np.eye(3), atol=1e-8)
    assert max(result.residuals) < 1e-11


def test_bec_mixed_solutions(load_operator):
    """测试混合态解：谱为 (0.5, 0.4, 0.1) 的 3! 个排列"""
    system = system_for(load_operator('bec_qutrit'), MIXED_QUTRIT)
    result = PolySolverService.solve(system)

    assert result.count == 6
    assert not result.truncated
    for rho in densities(system, result):
        assert np.allclose(np.linalg.eigvalsh(rho), [0.1, 0.4, 0.5], atol=1e-9)


def test_solve_is_deterministic(load_operator):
    """测试同一种子给出相同的解"""
    system = system_for(load_operator('bec_qutrit'), MIXED_QUTRIT)
    first = PolySolverService.solve(system, seed=7)
    second = PolySolverService.solve(system, seed=7)

    assert first.count == second.count
    assert all(np.array_equal(a, b) for a, b in zip(first.solutions, second.solutions))


def test_no_free_variables(load_operator):
    """测试无自由变量且偏移点不满足约束时报错"""
    op = load_operator('qubit_generic')
    param = CommutantService.critical_parametrization(op)
    system = PolySolverService.build_constraint_system(param, param.free_indices, PurityConstraints.pure(2),
                                                       strict_arity=False)

    with pytest.raises(SolverExhaustedError) as info:
        PolySolverService.solve(system)
    assert info.value.exit_code == 3


def test_orthogonal_constraint_excludes_known_projector(load_operator):
    """测试附加 ρ̂·ρ̂_k = 0 后不再返回已知投影"""
    op = load_operator('qubit_generic')
    first = system_for(op, PurityConstraints.pure(2))
    known = densities(first, PolySolverService.solve(first))[0]

    system = system_for(op, PurityConstraints.pure(2), orthogonal_to=[known])
    result = PolySolverService.solve(system)

    assert result.count == 1
    rho = densities(system, result)[0]
    assert np.allclose(rho @ known, 0.0, atol=1e-9)


def test_deduplicate():
    """测试去重保留残差较小者，结果按字典序排列"""
    points = np.array([[1.0, 1.0], [0.0, 0.0], [1e-9, 0.0]])
    residuals = np.array([0.0, 1e-12, 1e-13])

    merged, merged_res = PolySolverService._deduplicate(points, residuals, 1e-7)

    assert merged.tolist() == [[1e-9, 0.0], [1.0, 1.0]]
    assert merged_res.tolist() == [1e-13, 0.0]


def test_residual_map_batches(load_operator):
    """测试残差与 Jacobian 的批处理形状"""
    system = system_for(load_operator('bec_qutrit'), MIXED_QUTRIT)
    x = np.zeros((5, system.arity))

    assert system.residual_map(x).shape == (5, 2)
    assert system.jacobian_map(x).shape == (5, 2, 2)
    # 中心点 ρ̂ = Î/3 处的残差即最大混合常数与目标常数之差
    assert np.allclose(system.residual_map(x)[0], [1 / 3 - 29 / 100, 1 / 27 - 1 / 50], atol=1e-14)


def test_mixed_jacobian_matches_finite_differences(load_operator):
    """测试解析 Jacobian 与中心差分一致"""
    system = system_for(load_operator('bec_qutrit'), MIXED_QUTRIT)
    x = np.array([[0.1, -0.2]])
    J = system.jacobian_map(x)[0]
    step = 1e-6
    for col in range(2):
        shift = np.zeros((1, 2))
        shift[0, col] = step
        numeric = (system.residual_map(x + shift)[0] - system.residual_map(x - shift)[0]) / (2 * step)
        assert np.allclose(J[:, col], numeric, atol=1e-7)


def test_pure_jacobian_matches_finite_differences(load_operator):
    """测试纯态残差 Jacobian 与中心差分一致"""
    system = system_for(load_operator('bec_qutrit'), PurityConstraints.pure(3))
    x = np.array([[0.3, 0.05]])
    J = system.jacobian_map(x)[0]
    step = 1e-6
    for col in range(2):
        shift = np.zeros((1, 2))
        shift[0, col] = step
        numeric = (system.residual_map(x + shift)[0] - system.residual_map(x - shift)[0]) / (2 * step)
        assert np.allclose(J[:, col], numeric, atol=1e-7)
