from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Tuple

import numpy as np

from app.models.algebra import frozen_array


@dataclass(frozen=True)
class PurityConstraints:
    """纯度常数 (c_2, …, c_d)，即 ρ̂ 特征多项式的系数"""

    d: int
    c: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'c', tuple(float(v) for v in self.c))
        if len(self.c) != self.d - 1:
            raise ValueError(f'expected {self.d - 1} constants for d={self.d}, got {len(self.c)}')

    @classmethod
    def pure(cls, d):
        return cls(d, (0.0,) * (d - 1))

    @classmethod
    def maximally_mixed(cls, d):
        return cls(d, tuple(comb(d, k) / d ** k for k in range(2, d + 1)))

    @property
    def kind(self):
        return 'pure' if all(v == 0.0 for v in self.c) else 'mixed'

    @property
    def is_pure(self):
        return self.kind == 'pure'

    def is_maximally_mixed(self, tolerance):
        target = PurityConstraints.maximally_mixed(self.d).c
        return all(abs(a - b) <= tolerance for a, b in zip(self.c, target))

    def to_dict(self):
        return {
            'd': self.d,
            'kind': self.kind,
            'c': {f'c{k}': v for k, v in enumerate(self.c, start=2)}
        }

    def __repr__(self):
        return f'<PurityConstraints d={self.d} {self.kind} {self.c}>'


@dataclass(frozen=True, eq=False)
class TraceVector:
    """幂和 t_j = Tr(ρ̂^j)，j = 1 … 2(d−1)"""

    d: int
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 't', frozen_array(self.t))

    def power(self, j):
        """t_j，t_0 = d"""
        return float(self.d) if j == 0 else float(self.t[j - 1])

    def to_dict(self):
        return {'d': self.d, 't': [float(v) for v in self.t]}


@dataclass(frozen=True, eq=False)
class BezoutianMatrix:
    d: int
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'matrix', frozen_array(self.matrix))

    @property
    def determinant(self):
        return float(np.linalg.det(self.matrix))

    def to_dict(self):
        return {'d': self.d, 'B': self.matrix.tolist()}


class AdmissibilityStatus(str, Enum):
    ADMISSIBLE = 'admissible'
    BOUNDARY = 'boundary'
    INADMISSIBLE = 'inadmissible'


@dataclass(frozen=True)
class AdmissibilityResult:
    status: AdmissibilityStatus
    violated_condition: str = ''
    active_conditions: Tuple[str, ...] = ()
    values: Tuple[Tuple[str, float], ...] = ()

    @property
    def accepted(self):
        return self.status != AdmissibilityStatus.INADMISSIBLE

    def to_dict(self):
        return {
            'status': self.status.value,
            'violated_condition': self.violated_condition,
            'active_conditions': list(self.active_conditions),
            'values': {name: value for name, value in self.values}
        }
