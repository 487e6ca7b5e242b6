from dataclasses import dataclass
from typing import Tuple

import numpy as np

from app.models.algebra import HermitianOperator, frozen_array


@dataclass(frozen=True, eq=False)
class CommutantMatrix:
    """M_ij = Σ_k f_ijk h_k，M·λ = 0 的解即与 Ĥ 对易的 Bloch 向量"""

    d: int
    matrix: np.ndarray
    source: HermitianOperator

    def __post_init__(self):
        object.__setattr__(self, 'matrix', frozen_array(self.matrix))

    @property
    def norm(self):
        return float(np.abs(self.matrix).sum(axis=1).max()) if self.matrix.size else 0.0

    def to_dict(self):
        return {'d': self.d, 'M': self.matrix.tolist()}


@dataclass(frozen=True, eq=False)
class NullSpaceParametrization:
    """
    核空间的仿射参数化 λ = offset + basis·x

    free_indices / bound_indices 为 0 起始的 Bloch 下标；basis 在自由下标行上是单位阵，
    在约束下标行上即 expressing_map。
    """

    d: int
    r: int
    free_indices: Tuple[int, ...]
    bound_indices: Tuple[int, ...]
    offset: np.ndarray
    basis: np.ndarray
    near_degenerate: bool = False
    singular_values: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'free_indices', tuple(int(i) for i in self.free_indices))
        object.__setattr__(self, 'bound_indices', tuple(int(i) for i in self.bound_indices))
        object.__setattr__(self, 'offset', frozen_array(self.offset))
        basis = np.array(self.basis, dtype=float).reshape(self.d * self.d - 1, len(self.free_indices))
        object.__setattr__(self, 'basis', frozen_array(basis))

    @property
    def n(self):
        return len(self.free_indices)

    @property
    def expressing_map(self):
        """约束下标 → 自由变量上的线性泛函（含常数项）"""
        return {
            bound: {
                'constant': float(self.offset[bound]),
                'coefficients': {free: float(self.basis[bound, pos])
                                 for pos, free in enumerate(self.free_indices)}
            }
            for bound in self.bound_indices
        }

    def expand(self, x):
        """自由变量 → 完整 Bloch 向量；x 可为 (n,) 或 (S, n)"""
        x = np.asarray(x, dtype=float)
        return self.offset + x @ self.basis.T

    def to_dict(self):
        # 对外使用 1 起始下标
        return {
            'r': self.r,
            'n': self.n,
            'free_indices': [i + 1 for i in self.free_indices],
            'bound_indices': [i + 1 for i in self.bound_indices],
            'near_degenerate': self.near_degenerate
        }

    def __repr__(self):
        return f'<NullSpaceParametrization d={self.d} r={self.r} free={[i + 1 for i in self.free_indices]}>'


@dataclass(frozen=True)
class OrbitInfo:
    d: int
    r: int
    degeneracy_patterns: Tuple[Tuple[int, ...], ...]
    is_nondegenerate: bool

    @property
    def labels(self):
        letters = 'αβγδεζ'
        labels = []
        for pattern in self.degeneracy_patterns:
            if len(pattern) == 1:
                labels.append('point')
                continue
            entries = []
            for letter, multiplicity in zip(letters, pattern):
                entries.extend([letter] * multiplicity)
            labels.append(f"diag({','.join(entries)})")
        return tuple(labels)

    def to_dict(self):
        return {
            'd': self.d,
            'r': self.r,
            'degeneracy_patterns': [list(p) for p in self.degeneracy_patterns],
            'labels': list(self.labels),
            'is_nondegenerate': self.is_nondegenerate
        }
