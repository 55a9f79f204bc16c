"""Binary Hamming codes [2^k - 1, 2^k - 1 - k, 3] with positional syndrome decoding.

Bit positions are 1-based. Column ``j`` of the parity-check matrix is the
``k_chk``-bit binary representation of ``j`` with the most significant bit in
row 0, so the syndrome read as a binary number *is* the position of a single
flipped bit. Check bits sit at positions 1, 2, 4, ..., 2^(k-1).

All block operations accept arrays whose last axis is the block, so a whole
key can be processed as an ``(m, n)`` batch in one call.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .errors import ConsistencyError, ParameterError

MIN_K_CHK = 2
MAX_K_CHK = 12
BRUTEFORCE_MAX_K_INFO = 20


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.uint8)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CodeParams:
    """An immutable Hamming code instance. Build with :func:`build_code`."""

    k_chk: int
    n: int = field(compare=False)
    k_info: int = field(compare=False)
    check_positions: tuple[int, ...] = field(compare=False)
    generator: np.ndarray = field(compare=False, repr=False)
    parity_check: np.ndarray = field(compare=False, repr=False)

    @property
    def info_positions(self) -> tuple[int, ...]:
        """1-based non-check positions in ascending order."""
        checks = set(self.check_positions)
        return tuple(j for j in range(1, self.n + 1) if j not in checks)

    @functools.cached_property
    def _info_index(self) -> np.ndarray:
        return np.array(self.info_positions, dtype=np.intp) - 1

    @functools.cached_property
    def _check_index(self) -> np.ndarray:
        return np.array(self.check_positions, dtype=np.intp) - 1

    @property
    def rate(self) -> Fraction:
        return Fraction(self.k_info, self.n)

    @property
    def correctable_fraction(self) -> float:
        """One correctable error per block, as a bit fraction (1/n)."""
        return 1.0 / self.n

    def __str__(self) -> str:
        return f"[{self.n},{self.k_info},3]"


def _parity_check_matrix(k_chk: int) -> np.ndarray:
    n = (1 << k_chk) - 1
    cols = np.arange(1, n + 1)
    shifts = np.arange(k_chk - 1, -1, -1)[:, None]
    return ((cols[None, :] >> shifts) & 1).astype(np.uint8)


def _systematic_generator(h: np.ndarray) -> np.ndarray:
    """[I | P] for a parity-check matrix whose last k columns are invertible."""
    k, n = h.shape
    k_info = n - k
    q, e = h[:, :k_info].astype(np.int64), h[:, k_info:].astype(np.int64)
    # e is a permutation matrix here (unit vectors), so e^-1 = e^T.
    if not np.array_equal(e @ e.T, np.eye(k, dtype=np.int64)):
        raise ConsistencyError("check columns of the systematic form are not a permutation")
    p = (e.T @ q) % 2
    return np.hstack([np.eye(k_info, dtype=np.int64), p.T]).astype(np.uint8)


def _exchange_columns(m: np.ndarray, k_chk: int) -> np.ndarray:
    """Swap column 2^l with column n-l (1-based) for l = 0..k-1."""
    n = m.shape[1]
    out = m.copy()
    for l in range(k_chk):
        a, b = (1 << l) - 1, n - l - 1
        out[:, [a, b]] = out[:, [b, a]]
    return out


@functools.lru_cache(maxsize=None)
def build_code(k_chk: int) -> CodeParams:
    if not isinstance(k_chk, (int, np.integer)) or not MIN_K_CHK <= k_chk <= MAX_K_CHK:
        raise ParameterError(f"k_chk must be an integer in [{MIN_K_CHK}, {MAX_K_CHK}], got {k_chk!r}")
    k_chk = int(k_chk)
    n = (1 << k_chk) - 1
    k_info = n - k_chk
    h = _parity_check_matrix(k_chk)

    # The column exchange is an involution: un-exchanging H yields the
    # parity-check matrix of the systematic base code.
    g_sys = _systematic_generator(_exchange_columns(h, k_chk))
    g = _exchange_columns(g_sys, k_chk)

    # Relabel information bits (row order) so that info bit i lands on the
    # i-th non-check position. Same code, and extract_info inverts encode.
    check_positions = tuple(1 << l for l in range(k_chk))
    info_idx = [j - 1 for j in range(1, n + 1) if j not in check_positions]
    order = np.argmax(g[:, info_idx], axis=0)
    g = g[order]

    if np.any((g.astype(np.int64) @ h.T.astype(np.int64)) % 2):
        raise ConsistencyError("generator is not orthogonal to parity_check")
    if not np.array_equal(g[:, info_idx], np.eye(k_info, dtype=np.uint8)):
        raise ConsistencyError("generator is not systematic on the non-check positions")

    return CodeParams(
        k_chk=k_chk,
        n=n,
        k_info=k_info,
        check_positions=check_positions,
        generator=_frozen(g),
        parity_check=_frozen(h),
    )


def code_for_length(n: int) -> CodeParams:
    k_chk = int(n + 1).bit_length() - 1
    if n < 3 or (1 << k_chk) - 1 != n:
        raise ParameterError(f"{n} is not a Hamming block length 2^k - 1")
    return build_code(k_chk)


def _bits(x, length: int, what: str) -> np.ndarray:
    a = np.asarray(x, dtype=np.uint8)
    if a.ndim == 0 or a.shape[-1] != length:
        got = "scalar" if a.ndim == 0 else a.shape[-1]
        raise ParameterError(f"{what} must have length {length}, got {got}")
    return a


def _gf2_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # float32 BLAS is exact here: every dot product is an integer <= 4095.
    prod = a.astype(np.float32) @ b.astype(np.float32)
    return (prod.astype(np.int32) & 1).astype(np.uint8)


def encode(code: CodeParams, info) -> np.ndarray:
    """Multiply information word(s) of length ``k_info`` by the generator."""
    info = _bits(info, code.k_info, "information word")
    return _gf2_matmul(info, code.generator)


def syndrome(code: CodeParams, word) -> np.ndarray:
    """``H @ word`` over GF(2); ``s_1`` (the most significant bit) comes first."""
    word = _bits(word, code.n, "word")
    return _gf2_matmul(word, code.parity_check.T)


def syndrome_value(code: CodeParams, word) -> np.ndarray | int:
    """The syndrome read as the integer ``(s_1 ... s_k)_2``."""
    s = syndrome(code, word).astype(np.int64)
    weights = 1 << np.arange(code.k_chk - 1, -1, -1, dtype=np.int64)
    v = s @ weights
    return int(v) if np.ndim(v) == 0 else v


def flip_positions(word: np.ndarray, positions) -> np.ndarray:
    """Flip the 1-based ``positions`` (0 = leave alone) of each block in ``word``."""
    out = np.array(word, dtype=np.uint8, copy=True)
    pos = np.asarray(positions, dtype=np.int64)
    if out.ndim == 1:
        if pos > 0:
            out[pos - 1] ^= 1
        return out
    flat = out.reshape(-1, out.shape[-1])
    pos = pos.reshape(-1)
    rows = np.nonzero(pos)[0]
    flat[rows, pos[rows] - 1] ^= 1
    return flat.reshape(out.shape)


def correct_one(code: CodeParams, word) -> tuple[np.ndarray, np.ndarray | bool]:
    """Flip the bit named by the syndrome, if any.

    Returns
    -------
    corrected_word : np.ndarray
        Same shape as ``word``; always a codeword.
    corrected : bool or np.ndarray of bool
        Whether a bit was flipped (per block for batched input).
    """
    word = _bits(word, code.n, "word")
    pos = syndrome_value(code, word)
    out = flip_positions(word, pos)
    corrected = np.asarray(pos) > 0
    return out, (bool(corrected) if corrected.ndim == 0 else corrected)


def extract_info(code: CodeParams, word) -> np.ndarray:
    """Bits at the non-check positions, ascending. Works on any length-n block."""
    word = _bits(word, code.n, "word")
    return word[..., code._info_index]


def discard_checks(code: CodeParams, word) -> np.ndarray:
    return extract_info(code, word)


@dataclass(frozen=True)
class WeightDistribution:
    n: int
    coefficients: tuple[int, ...]

    def __post_init__(self):
        if len(self.coefficients) != self.n + 1:
            raise ParameterError("need n + 1 coefficients")

    def __getitem__(self, i: int) -> int:
        """``A_i`` with ``A_i = 0`` outside ``[0, n]``."""
        if 0 <= i <= self.n:
            return self.coefficients[i]
        return 0

    def __iter__(self):
        return iter(self.coefficients)

    @property
    def total(self) -> int:
        return sum(self.coefficients)


def weight_distribution_closed_form(n: int) -> WeightDistribution:
    """``A_k = C(n,k)/(n+1) + n/(n+1) * (-1)^ceil(k/2) * C((n-1)/2, floor(k/2))``.

    Evaluated in exact rationals; each coefficient must come out a
    non-negative integer.
    """
    if not isinstance(n, (int, np.integer)) or n < 3 or (n + 1) & n:
        raise ParameterError(f"{n!r} is not a Hamming block length 2^m - 1 with m >= 2")
    n = int(n)
    half = (n - 1) // 2
    coeffs = []
    for k in range(n + 1):
        sign = -1 if ((k + 1) // 2) % 2 else 1
        a = Fraction(comb(n, k), n + 1) + Fraction(n, n + 1) * sign * comb(half, k // 2)
        if a.denominator != 1 or a < 0:
            raise ConsistencyError(f"A_{k} = {a} is not a non-negative integer")
        coeffs.append(int(a))
    return WeightDistribution(n, tuple(coeffs))


def all_codewords(code: CodeParams) -> np.ndarray:
    if code.k_info > BRUTEFORCE_MAX_K_INFO:
        raise ParameterError(
            f"enumeration needs k_info <= {BRUTEFORCE_MAX_K_INFO}, code has {code.k_info}"
        )
    idx = np.arange(1 << code.k_info, dtype=np.int64)
    shifts = np.arange(code.k_info - 1, -1, -1, dtype=np.int64)
    info = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
    return encode(code, info)


def weight_distribution_bruteforce(code: CodeParams) -> WeightDistribution:
    weights = all_codewords(code).sum(axis=1, dtype=np.int64)
    counts = np.bincount(weights, minlength=code.n + 1)
    return WeightDistribution(code.n, tuple(int(c) for c in counts))
