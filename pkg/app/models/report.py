import hashlib
import json
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from app.models.algebra import frozen_array

REPORT_SCHEMA_VERSION = 'qex-report/1'


@dataclass(frozen=True, eq=False)
class OperatorFile:
    """
    算符文件

    matrix 为求值后的 d×d 复矩阵；terms 存在时 matrix = Σ_p coeff_p · terms[p]，
    其中键 "1" 为常数项，其余键须出现在 parameters 中。
    """

    d: int
    matrix: np.ndarray
    name: str = ''
    parameters: Dict[str, float] = field(default_factory=dict)
    terms: Optional[Dict[str, np.ndarray]] = None
    source: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'matrix', frozen_array(self.matrix, complex))
        object.__setattr__(self, 'parameters', dict(self.parameters))
        if self.terms is not None:
            object.__setattr__(self, 'terms', {k: frozen_array(v, complex) for k, v in self.terms.items()})

    @staticmethod
    def evaluate_terms(terms, parameters):
        shape = next(iter(terms.values())).shape
        matrix = np.zeros(shape, dtype=complex)
        for key, term in terms.items():
            matrix = matrix + (1.0 if key == '1' else float(parameters[key])) * term
        return matrix

    def with_parameters(self, **overrides):
        """返回覆盖了参数值的新文件"""
        parameters = {**self.parameters, **overrides}
        matrix = self.evaluate_terms(self.terms, parameters) if self.terms else self.matrix
        return OperatorFile(self.d, matrix, self.name, parameters, self.terms, self.source)

    @property
    def digest(self):
        """SHA-256(规范 JSON)；参数一并计入"""
        payload = {
            'd': self.d,
            'matrix': [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix],
            'parameters': {k: float(v) for k, v in sorted(self.parameters.items())}
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def __repr__(self):
        return f'<OperatorFile {self.name or self.source} d={self.d}>'


@dataclass(frozen=True)
class RunReport:
    mode: str
    input_digest: str
    seed: int
    d: int
    constants: Optional[dict] = None
    solutions: tuple = ()
    spectrum: Optional[dict] = None
    decompositions: tuple = ()
    oracle: Optional[dict] = None
    timing: Optional[dict] = None
    rows: tuple = ()
    name: str = ''

    def to_dict(self):
        report = {
            'schema': REPORT_SCHEMA_VERSION,
            'mode': self.mode,
            'name': self.name,
            'input_digest': self.input_digest,
            'seed': self.seed,
            'd': self.d,
            'constants': self.constants,
            'solutions': list(self.solutions),
            'spectrum': self.spectrum,
            'decompositions': list(self.decompositions),
            'oracle': self.oracle,
            'rows': list(self.rows)
        }
        if self.timing is not None:
            report['timing'] = self.timing
        return report
