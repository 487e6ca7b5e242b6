from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

from app.models.algebra import BlochVector, encode_matrix, frozen_array
from app.models.commutant import NullSpaceParametrization
from app.models.positivity import PurityConstraints


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """
    约束方程组 x ↦ 残差

    mixed：残差为 a_k(x) − c_k，k = 2 … d，共 d−1 个未知数。
    pure：残差为 ρ̂² − ρ̂ 的实嵌入，另加对已知投影算符的 ρ̂·ρ̂_k。
    residual_map / jacobian_map 均按批处理：(S, n) → (S, m) / (S, m, n)。
    """

    d: int
    arity: int
    mode: str
    constants: PurityConstraints
    param: NullSpaceParametrization
    fixed_zero: Tuple[int, ...]
    offset: np.ndarray
    basis: np.ndarray
    residual_map: Callable = field(repr=False)
    jacobian_map: Callable = field(repr=False)
    orthogonal_to: Tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'offset', frozen_array(self.offset))
        object.__setattr__(self, 'basis', frozen_array(self.basis))

    def bloch(self, x):
        x = np.asarray(x, dtype=float)
        return self.offset + x @ self.basis.T

    def __repr__(self):
        return f'<ConstraintSystem d={self.d} {self.mode} arity={self.arity}>'


@dataclass(frozen=True, eq=False)
class SolutionSet:
    solutions: Tuple[np.ndarray, ...]
    residuals: Tuple[float, ...]
    starts_used: int = 0
    truncated: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'solutions', tuple(frozen_array(s) for s in self.solutions))
        object.__setattr__(self, 'residuals', tuple(float(r) for r in self.residuals))

    @property
    def count(self):
        return len(self.solutions)

    def to_dict(self):
        return {
            'count': self.count,
            'solutions': [s.tolist() for s in self.solutions],
            'residuals': list(self.residuals),
            'starts_used': self.starts_used,
            'truncated': self.truncated
        }


@dataclass(frozen=True, eq=False)
class CriticalSolution:
    bloch: BlochVector
    rho: np.ndarray
    mean_value: float
    commutator_residual: float
    purity: PurityConstraints
    label: int = 0
    residual: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'rho', frozen_array(self.rho, complex))

    @property
    def is_pure(self):
        return self.bloch.purity_class.value == 'pure'

    def with_label(self, label):
        return CriticalSolution(self.bloch, self.rho, self.mean_value, self.commutator_residual,
                                self.purity, label, self.residual)

    def to_dict(self):
        return {
            'label': self.label,
            'bloch': [float(v) for v in self.bloch.values],
            'purity_class': self.bloch.purity_class.value,
            'rho': encode_matrix(self.rho),
            'mean_value': float(self.mean_value),
            'commutator_residual': float(self.commutator_residual),
            'residual': float(self.residual),
            'purity': self.purity.to_dict()['c']
        }

    def __repr__(self):
        return f'<CriticalSolution m={self.label} <H>={self.mean_value:.12g}>'


@dataclass(frozen=True, eq=False)
class SpectralResult:
    projectors: Tuple[CriticalSolution, ...]
    eigenvalues: np.ndarray
    completeness_residual: float
    rounds: int = 1
    orbit: object = None

    def __post_init__(self):
        object.__setattr__(self, 'projectors', tuple(self.projectors))
        object.__setattr__(self, 'eigenvalues', frozen_array(self.eigenvalues))

    @property
    def d(self):
        return len(self.eigenvalues)

    def to_dict(self):
        return {
            'eigenvalues': [float(v) for v in self.eigenvalues],
            'completeness_residual': float(self.completeness_residual),
            'rounds': self.rounds,
            'orbit': self.orbit.to_dict() if self.orbit is not None else None,
            'projectors': [p.to_dict() for p in self.projectors]
        }


@dataclass(frozen=True, eq=False)
class ConvexDecomposition:
    weights: np.ndarray
    basis: SpectralResult
    reconstruction_residual: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'weights', frozen_array(self.weights))

    def to_dict(self):
        return {
            'weights': [float(w) for w in self.weights],
            'eigenvalues': [float(v) for v in self.basis.eigenvalues],
            'reconstruction_residual': float(self.reconstruction_residual)
        }
