"""One-time-pad CRC MAC: ``aut = (M(x) * x^m mod p(x)) xor K``.

Polynomials over GF(2) are Python ints with bit ``i`` holding the coefficient
of ``x^i``. A message bit vector is read most significant first, i.e. its
first element is the coefficient of ``x^(len-1)``; a byte string is read the
same way (big-endian, MSB-first within bytes), so a bit vector and its packed
bytes hash identically.
"""

from __future__ import annotations

import functools
import hmac
from dataclasses import dataclass, field

import numpy as np

from .errors import KeyReuseError, ParameterError

DEFAULT_MAC_WIDTH = 64


# -- GF(2)[x] arithmetic ---------------------------------------------------------


def degree(poly: int) -> int:
    return poly.bit_length() - 1


def poly_mod(a: int, p: int) -> int:
    dp = degree(p)
    if dp < 0:
        raise ParameterError("division by the zero polynomial")
    da = degree(a)
    while da >= dp:
        a ^= p << (da - dp)
        da = degree(a)
    return a


def poly_mulmod(a: int, b: int, p: int) -> int:
    dp = degree(p)
    top = 1 << dp
    a = poly_mod(a, p)
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= p
    return out


def poly_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
    return out


def poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def _prime_factors(m: int) -> list[int]:
    out, q = [], 2
    while q * q <= m:
        if m % q == 0:
            out.append(q)
            while m % q == 0:
                m //= q
        q += 1
    if m > 1:
        out.append(m)
    return out


def _square_table(p: int) -> list[int]:
    """``x^(2i) mod p`` for ``i < deg p``; squaring is linear, so these rows span it."""
    m = degree(p)
    top = 1 << m
    rows, r = [], 1
    for _ in range(m):
        rows.append(r)
        for _ in range(2):
            r <<= 1
            if r & top:
                r ^= p
    return rows


def _square(a: int, rows: list[int]) -> int:
    out, i = 0, 0
    while a:
        if a & 1:
            out ^= rows[i]
        a >>= 1
        i += 1
    return out


# Random polynomials usually have a small factor; screening for factors of
# degree <= 4 first rejects most candidates after four squarings.
_SCREEN_DEGREE = 4


def is_irreducible(poly: int) -> bool:
    """Rabin's test over GF(2), after a short small-factor screen."""
    if poly <= 0:
        raise ParameterError("the zero polynomial has no irreducibility")
    m = degree(poly)
    if m < 1:
        return False
    rows = _square_table(poly)
    x = poly_mod(0b10, poly)
    wanted = {m // q for q in _prime_factors(m)}
    powers = {}
    r = x
    for k in range(1, m + 1):
        r = _square(r, rows)
        # x^(2^k) - x is the product of all irreducibles of degree dividing k
        if k <= _SCREEN_DEGREE and k < m and poly_gcd(poly, r ^ x) != 1:
            return False
        if k in wanted:
            powers[k] = r
    if r != x:
        return False
    return all(poly_gcd(poly, powers[k] ^ x) == 1 for k in wanted)


@functools.lru_cache(maxsize=None)
def default_poly(m: int) -> int:
    """Smallest (as an integer) irreducible polynomial of degree ``m``."""
    if m < 2:
        raise ParameterError("MAC width must be at least 2")
    base = 1 << m
    for low in range(1, base, 2):
        if is_irreducible(base | low):
            return base | low
    raise AssertionError("unreachable: irreducibles exist in every degree")


def random_irreducible(m: int, rng: np.random.Generator) -> int:
    if m < 2:
        raise ParameterError("MAC width must be at least 2")
    while True:
        low = int.from_bytes(rng.bytes((m + 7) // 8), "big") & ((1 << m) - 1)
        cand = (1 << m) | low | 1
        if is_irreducible(cand):
            return cand


# -- hashing -----------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _tables(poly: int) -> tuple[list[int], list[int]]:
    t8 = _table8(poly)
    t16 = [0] * 65536
    for hi in range(256):
        h = poly_mod(t8[hi] << 8, poly)
        base = hi << 8
        for lo in range(256):
            t16[base | lo] = h ^ t8[lo]
    return t8, t16


@functools.lru_cache(maxsize=32)
def _table8(poly: int) -> list[int]:
    m = degree(poly)
    return [poly_mod(i << m, poly) for i in range(256)]


def _crc_bytewise(data: bytes, poly: int) -> int:
    m = degree(poly)
    t8 = _table8(poly)
    mask = (1 << m) - 1
    shift = m - 8
    r = 0
    for b in data:
        r = ((r << 8) & mask) ^ t8[(r >> shift) ^ b]
    return r


# Below this many bytes the 256-entry table is cheaper overall than building
# the 2^16-entry one, which matters when every session draws a new polynomial.
_WIDE_TABLE_MIN_BYTES = 1 << 16


def crc_bytes(data: bytes, poly: int) -> int:
    """``D(x) * x^m mod p(x)`` for ``D`` the big-endian integer of ``data``."""
    m = degree(poly)
    if m < 16:
        return poly_mod(int.from_bytes(data, "big") << m, poly)
    data = bytes(data)
    if len(data) < _WIDE_TABLE_MIN_BYTES:
        return _crc_bytewise(data, poly)
    t8, t16 = _tables(poly)
    mask = (1 << m) - 1
    shift = m - 16
    r = 0
    even = len(data) - len(data) % 2
    for w in np.frombuffer(data[:even], dtype=">u2").tolist():
        r = ((r << 16) & mask) ^ t16[(r >> shift) ^ w]
    if even < len(data):
        r = ((r << 8) & mask) ^ t8[(r >> (m - 8)) ^ data[-1]]
    return r


def bits_to_int(bits) -> int:
    a = np.asarray(bits, dtype=np.uint8).reshape(-1)
    pad = (-a.size) % 8
    if pad:
        a = np.concatenate([np.zeros(pad, dtype=np.uint8), a])
    return int.from_bytes(np.packbits(a).tobytes(), "big")


def int_to_bits(value: int, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1, dtype=object)
    return np.array([(value >> int(s)) & 1 for s in shifts], dtype=np.uint8)


def _message_hash(message, poly: int) -> int:
    if isinstance(message, (bytes, bytearray, memoryview)):
        return crc_bytes(bytes(message), poly)
    a = np.asarray(message, dtype=np.uint8).reshape(-1)
    if a.size == 0:
        raise ParameterError("message must be non-empty")
    pad = (-a.size) % 8
    if pad:
        a = np.concatenate([np.zeros(pad, dtype=np.uint8), a])
    return crc_bytes(np.packbits(a).tobytes(), poly)


def crc_hash(message, poly: int) -> np.ndarray:
    """Hash bits, coefficient of ``x^(m-1)`` first."""
    return int_to_bits(_message_hash(message, poly), degree(poly))


# -- keys and tags -------------------------------------------------------------


@dataclass(frozen=True)
class Tag:
    value: int
    width: int

    @property
    def bits(self) -> np.ndarray:
        return int_to_bits(self.value, self.width)

    def to_bytes(self) -> bytes:
        return self.value.to_bytes((self.width + 7) // 8, "big")

    @classmethod
    def from_bytes(cls, data: bytes, width: int) -> "Tag":
        return cls(int.from_bytes(data, "big"), width)

    @classmethod
    def from_bits(cls, bits) -> "Tag":
        a = np.asarray(bits, dtype=np.uint8).reshape(-1)
        return cls(bits_to_int(a), a.size)


@dataclass(eq=False)
class MacKey:
    """Pre-shared ``(p(x), K)``. ``K`` pads exactly one tag.

    Each party holds its own copy; the tagger's copy is consumed by
    :func:`mac_tag`, the verifier's by nothing.
    """

    poly: int
    otp: int
    consumed: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.otp, int):
            self.otp = bits_to_int(self.otp)
        if not isinstance(self.poly, int):
            self.poly = bits_to_int(self.poly)
        if degree(self.poly) < 2:
            raise ParameterError("MAC polynomial must have degree >= 2")
        if not is_irreducible(self.poly):
            raise ParameterError(f"polynomial {self.poly:#x} is not irreducible")
        if not 0 <= self.otp < (1 << self.width):
            raise ParameterError(f"one-time pad must fit in {self.width} bits")

    @property
    def width(self) -> int:
        return degree(self.poly)

    @property
    def otp_bits(self) -> np.ndarray:
        return int_to_bits(self.otp, self.width)

    def copy(self) -> "MacKey":
        return MacKey(self.poly, self.otp)

    @classmethod
    def generate(cls, width: int = DEFAULT_MAC_WIDTH, rng: np.random.Generator | None = None,
                 secret_poly: bool = True) -> "MacKey":
        """Draw fresh key material. With ``secret_poly=False`` the fixed
        :func:`default_poly` is used and only the pad is random."""
        rng = rng if rng is not None else np.random.default_rng()
        poly = random_irreducible(width, rng) if secret_poly else default_poly(width)
        otp = int.from_bytes(rng.bytes((width + 7) // 8), "big") & ((1 << width) - 1)
        return cls(poly, otp)


def _compute_tag(message, key: MacKey) -> Tag:
    return Tag(_message_hash(message, key.poly) ^ key.otp, key.width)


def mac_tag(message, key: MacKey) -> Tag:
    if key.consumed:
        raise KeyReuseError("one-time MAC key already used")
    key.consumed = True
    return _compute_tag(message, key)


def mac_verify(message, tag: Tag, key: MacKey) -> bool:
    if tag.width != key.width:
        return False
    expected = _compute_tag(message, key)
    return hmac.compare_digest(expected.to_bytes(), tag.to_bytes())


def forgery_bound(msg_bits: int, m: int) -> float:
    """Success probability bound ``(msg_bits + m) / 2^(m-1)`` for a single forgery."""
    if m <= 1:
        raise ParameterError("m must exceed 1")
    return (msg_bits + m) / 2.0 ** (m - 1)


# -- self test (CLI) -------------------------------------------------------------


def run_selftest(cases: int = 1000, seed: int = 0, tamper: bool = False) -> list[str]:
    """Round-trip, tamper, linearity and reuse checks; returns failure descriptions."""
    rng = np.random.default_rng(seed)
    failures: list[str] = []

    # exhaustive small case: p = x^3 + x + 1, M = 1010
    small = 0b1011
    msg = np.array([1, 0, 1, 0], dtype=np.uint8)
    for i in range(msg.size):
        flipped = msg.copy()
        flipped[i] ^= 1
        t = _compute_tag(msg, MacKey(small, 0b101))
        if mac_verify(flipped, t, MacKey(small, 0b101)):
            failures.append(f"undetected flip of bit {i} in 1010 under x^3+x+1")

    poly = default_poly(DEFAULT_MAC_WIDTH)
    for case in range(cases):
        length = int(rng.integers(1, 512))
        m1 = rng.integers(0, 2, length, dtype=np.uint8)
        m2 = rng.integers(0, 2, length, dtype=np.uint8)
        h1, h2, h12 = (bits_to_int(crc_hash(x, poly)) for x in (m1, m2, m1 ^ m2))
        if h1 ^ h2 != h12:
            failures.append(f"case {case}: hash not linear")
        key = MacKey.generate(DEFAULT_MAC_WIDTH, rng, secret_poly=False)
        bob = key.copy()
        tag = mac_tag(m1, key)
        received = m1.copy()
        if tamper:
            received[int(rng.integers(length))] ^= 1
        if not mac_verify(received, tag, bob):
            failures.append(f"case {case}: authentic message of {length} bits rejected")
        j = int(rng.integers(length))
        forged = m1.copy()
        forged[j] ^= 1
        if mac_verify(forged, tag, bob):
            failures.append(f"case {case}: flip of bit {j} not detected")
        try:
            mac_tag(m2, key)
        except KeyReuseError:
            pass
        else:
            failures.append(f"case {case}: key reuse not refused")
    return failures
