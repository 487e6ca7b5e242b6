from .errors import QexError

__all__ = ['QexError']
