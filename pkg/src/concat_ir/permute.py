"""Wire-link permutation: read the string as an m x n matrix row by row, write it column by column.

The string shrinks (syndrome protocol) or grows (encoding protocols) between
rounds, so the inverse of a forward shape ``(m, n)`` is the transpose with the
swapped shape ``(n, m)``; shapes are always tracked explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class WlpShape:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ParameterError(f"shape must have m, n >= 1, got ({self.m}, {self.n})")

    @property
    def size(self) -> int:
        return self.m * self.n

    @property
    def swapped(self) -> "WlpShape":
        return WlpShape(self.n, self.m)


def _check(bits, shape: WlpShape) -> np.ndarray:
    a = np.asarray(bits)
    if a.ndim != 1 or a.size != shape.size:
        raise ParameterError(
            f"bit string of length {a.size} does not fit shape {shape.m}x{shape.n}"
        )
    return a


def wlp_apply(bits, shape: WlpShape) -> np.ndarray:
    """Input index ``(i-1)*n + (j-1)`` goes to output index ``(j-1)*m + (i-1)``."""
    a = _check(bits, shape)
    return np.ascontiguousarray(a.reshape(shape.m, shape.n).T).reshape(-1)


def wlp_inverse(bits, shape: WlpShape) -> np.ndarray:
    """Undo :func:`wlp_apply` given the forward ``shape``."""
    return wlp_apply(bits, shape.swapped)


def index_map(shape: WlpShape) -> np.ndarray:
    """``out[k]`` is the input index that lands at output position ``k``."""
    return wlp_apply(np.arange(shape.size), shape)


def split_blocks(bits, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Split into ``floor(len / n)`` full blocks (as an ``(m, n)`` array) and a remainder."""
    a = np.asarray(bits)
    m = a.size // n
    return a[: m * n].reshape(m, n), a[m * n :]


def permute_round(bits, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Permute the full-block body with shape ``(m, n)``; return (blocks, remainder).

    The ``< n`` trailing bits bypass the permutation and the round's coding.
    The returned blocks are the permuted body re-read as ``m`` blocks of ``n``.
    """
    a = np.asarray(bits)
    m = a.size // n
    if m == 0:
        return a[:0].reshape(0, n), a
    body = wlp_apply(a[: m * n], WlpShape(m, n))
    return body.reshape(m, n), a[m * n :]
