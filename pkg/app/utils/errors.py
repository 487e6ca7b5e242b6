"""
qex 错误层级

每个异常携带 CLI 退出码和 HTTP 状态码，服务边界据此转换。
"""


class QexError(Exception):
    """所有 qex 异常的基类"""

    exit_code = 1
    http_status = 500

    def __init__(self, message, details=None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self):
        return {
            'error': type(self).__name__,
            'message': self.message,
            'details': self.details
        }


class ValidationError(QexError):
    exit_code = 2
    http_status = 400


class DimensionError(ValidationError):
    pass


class NonHermitianError(ValidationError):
    pass


class NonUnitaryError(ValidationError):
    pass


class InadmissibleConstraintsError(ValidationError):
    """纯度常数不满足 Bezoutian 条件，或 Bloch 向量落在球外；details['violated'] 给出违反的条件名"""


class ScalarOperatorError(ValidationError):
    pass


class NonCommutingError(ValidationError):
    pass


class UnknownParameterError(ValidationError):
    pass


class SolverExhaustedError(QexError):
    exit_code = 3
    http_status = 422


class SpectrumIncompleteError(SolverExhaustedError):

    def __init__(self, message, partial=None, details=None):
        super().__init__(message, details)
        self.partial = partial or []


class OracleNonConvergenceError(SolverExhaustedError):
    pass


class BasisError(SolverExhaustedError):
    pass


class FixtureIOError(QexError):
    exit_code = 4
    http_status = 404
