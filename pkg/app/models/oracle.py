from dataclasses import dataclass

import numpy as np

from app.models.algebra import encode_matrix, frozen_array


@dataclass(frozen=True, eq=False)
class OracleSpectrum:
    """独立校验用的本征分解，本征值降序，eigenvectors 的列与之对应"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual: float
    sweeps: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'eigenvalues', frozen_array(self.eigenvalues))
        object.__setattr__(self, 'eigenvectors', frozen_array(self.eigenvectors, complex))

    def to_dict(self):
        return {
            'eigenvalues': [float(v) for v in self.eigenvalues],
            'eigenvectors': encode_matrix(self.eigenvectors),
            'residual': float(self.residual),
            'sweeps': self.sweeps
        }
