"""Parallel and sequential string sorting over a shared byte arena."""
from ._jit import BACKEND, JIT_ENABLED
from .strset import StringSet, build_from_lines, build_suffixes, from_strings

__all__ = ["BACKEND", "JIT_ENABLED", "StringSet", "build_from_lines", "build_suffixes", "from_strings"]
__version__ = "0.1.0"
