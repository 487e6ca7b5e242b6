from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Tuple

import numpy as np


def frozen_array(values, dtype=float):
    """复制为只读 numpy 数组"""
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def encode_complex(value):
    return {'re': float(np.real(value)), 'im': float(np.imag(value))}


def encode_matrix(matrix):
    return [[encode_complex(entry) for entry in row] for row in np.asarray(matrix)]


class PurityClass(str, Enum):
    PURE = 'pure'
    MIXED = 'mixed'
    UNCONSTRAINED = 'unconstrained'


@dataclass(frozen=True, eq=False)
class GeneratorBasis:
    """su(d) 广义 Gell-Mann 生成元：对称块、反对称块、对角块"""

    d: int
    matrices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'matrices', frozen_array(self.matrices, complex))

    @property
    def size(self):
        return self.d * self.d - 1

    @property
    def diagonal_indices(self) -> Tuple[int, ...]:
        """对角生成元的 0 起始下标"""
        return tuple(range(self.d * (self.d - 1), self.size))

    def to_dict(self):
        return {
            'd': self.d,
            'matrices': [encode_matrix(m) for m in self.matrices]
        }

    def __repr__(self):
        return f'<GeneratorBasis d={self.d} size={self.size}>'


@dataclass(frozen=True, eq=False)
class StructureTensor:
    """结构常数 f（全反对称）与 dsym（全对称），稠密存储"""

    d: int
    f: np.ndarray
    dsym: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'f', frozen_array(self.f))
        object.__setattr__(self, 'dsym', frozen_array(self.dsym))

    @staticmethod
    def _entries(tensor) -> Dict[Tuple[int, int, int], float]:
        return {tuple(int(i) for i in idx): float(tensor[tuple(idx)])
                for idx in np.argwhere(tensor != 0.0)}

    @property
    def f_entries(self):
        """非零反对称常数，键为 0 起始 (j, k, q)"""
        return self._entries(self.f)

    @property
    def dsym_entries(self):
        return self._entries(self.dsym)

    def to_dict(self):
        # JSON 中使用 1 起始下标，与物理文献一致
        return {
            'd': self.d,
            'f': [[j + 1, k + 1, q + 1, v] for (j, k, q), v in sorted(self.f_entries.items())],
            'dsym': [[j + 1, k + 1, q + 1, v] for (j, k, q), v in sorted(self.dsym_entries.items())]
        }

    def __repr__(self):
        return f'<StructureTensor d={self.d} nnz_f={int(np.count_nonzero(self.f))}>'


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Ĥ = (h0/d)Î + ½ Σ h_k λ̂_k"""

    d: int
    h0: float
    h: np.ndarray
    name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'h', frozen_array(self.h))
        if self.h.shape != (self.d * self.d - 1,):
            raise ValueError(f'Bloch vector length {self.h.shape} does not match d={self.d}')

    @property
    def bloch_norm(self):
        return float(np.linalg.norm(self.h))

    def to_dict(self):
        return {
            'd': self.d,
            'name': self.name,
            'h0': float(self.h0),
            'h': [float(v) for v in self.h]
        }

    def __repr__(self):
        return f'<HermitianOperator d={self.d} {self.name}>'


@dataclass(frozen=True, eq=False)
class BlochVector:
    d: int
    values: np.ndarray
    purity_class: PurityClass = PurityClass.UNCONSTRAINED
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'values', frozen_array(self.values))
        object.__setattr__(self, 'purity_class', PurityClass(self.purity_class))

    @staticmethod
    def ball_radius(d):
        return float(np.sqrt(2.0 * (d - 1) / d))

    @property
    def norm(self):
        return float(np.linalg.norm(self.values))

    def within_ball(self, tolerance=1e-9):
        return self.norm <= self.ball_radius(self.d) + tolerance

    def to_dict(self):
        return {
            'd': self.d,
            'lambda': [float(v) for v in self.values],
            'purity_class': self.purity_class.value
        }

    def __repr__(self):
        return f'<BlochVector d={self.d} {self.purity_class.value} |λ|={self.norm:.6g}>'
