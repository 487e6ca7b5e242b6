from . import qex

__all__ = ['qex']
