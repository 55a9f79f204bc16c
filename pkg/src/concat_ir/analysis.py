"""Error-rate models for one round of Hamming syndrome decoding, and depth planning.

Two per-round models are available:

``ModelKind.DISTANCE``
    Expected residual bit error rate when a block with ``k`` errors either
    lands on a codeword (``k`` errors survive) or is moved to a uniformly chosen
    codeword at distance ``k - 1`` or ``k + 1``. Built from the weight
    distribution.
``ModelKind.WORST_CASE``
    Upper bound ``chi / n`` where every multi-error block gains one error.

Exactness-critical quantities (weight distribution, ratio terms, left rates)
use :class:`fractions.Fraction`; curves and recursions use float64.
"""

from __future__ import annotations

import enum
import functools
import io
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .codec import CodeParams, WeightDistribution, code_for_length, weight_distribution_closed_form
from .errors import ParameterError, PlanningError

MAX_ROUNDS = 64
ROOT_SCAN_CELLS = 10_000
ROOT_TOL = 1e-12


class ModelKind(enum.Enum):
    DISTANCE = "distance"
    WORST_CASE = "lemma1"


def _check_p(p):
    a = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a < 0) or np.any(a > 1):
        raise ParameterError(f"probability out of [0, 1]: {p!r}")
    return a


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def neighbour_ratio(weights: WeightDistribution, k: int) -> Fraction:
    """``(A_{k+1} - A_{k-1}) / (A_{k-1} + A_{k+1})``, 0 when both neighbours vanish."""
    lo, hi = weights[k - 1], weights[k + 1]
    if lo + hi == 0:
        return Fraction(0)
    return Fraction(hi - lo, lo + hi)


@functools.lru_cache(maxsize=None)
def _distance_terms(n: int) -> np.ndarray:
    w = weight_distribution_closed_form(n)
    return np.array(
        [float((comb(n, k) - w[k]) * neighbour_ratio(w, k)) for k in range(n + 1)]
    )


def _binomial_terms(n: int, p: np.ndarray) -> np.ndarray:
    k = np.arange(n + 1)
    p = p[..., None]
    return p**k * (1 - p) ** (n - k)


def p1_distance_model(n: int, p):
    """Residual bit error rate after one round under the distance model."""
    code_for_length(n)
    p = _check_p(p)
    terms = _distance_terms(n)
    np1 = _binomial_terms(n, p) @ terms + n * p
    return _scalar(np1 / n)


@functools.lru_cache(maxsize=None)
def _worst_case_terms(n: int) -> np.ndarray:
    w = np.array([float((1 + i) * comb(n, i)) for i in range(n + 1)])
    w[:2] = 0.0
    w[n] = float(n - 1)
    return w


def chi_upper(n: int, p):
    """Upper bound on expected errors per block after one round.

    Equals ``1 + n p - 2 p^n - (1 - p + 2 n p)(1 - p)^(n - 1)``; evaluated as
    the binomial sum it collapses from (each ``k >= 2`` error pattern ends
    with ``k + 1`` errors, except ``n`` which ends with ``n - 1``), which has no
    cancellation at small ``p``.
    """
    p = _check_p(p)
    return _scalar(_binomial_terms(n, p) @ _worst_case_terms(n))


def chi_upper_closed_form(n: int, p: float) -> float:
    """:func:`chi_upper` evaluated term for term from the closed form in double precision.

    Cancellation leaves only rounding residue once ``p`` drops below about
    ``1e-8``: at ``n = 15``, ``p = 2.2e-10`` the result is a small multiple of
    machine epsilon where the true value is ``1.5e-17``. It is kept because
    published round tables were computed this way; :func:`round_table` uses
    it on request.
    """
    p = float(p)
    return 1 + n * p - 2 * p**n - (1 - p + 2 * n * p) * (1 - p) ** (n - 1)


def chi_quadratic_bound(n: int, p):
    """``n (n - 1) p^2 [1 + (1 - p)^(n - 2) / 2]``, which dominates :func:`chi_upper` on (0, 1)."""
    p = _check_p(p)
    return _scalar(n * (n - 1) * p**2 * (1 + 0.5 * (1 - p) ** (n - 2)))


def contraction_bound(n: int, p):
    """Right-hand side of the sufficient condition ``p < 1 / ((n-1)[1 + (1-p)^(n-2)/2])``.

    A :class:`~fractions.Fraction` ``p`` gives an exact result; in floating
    point the bound rounds to ``1/(n-1)`` as ``p`` approaches 1.
    """
    return 1 / ((n - 1) * (1 + (1 - p) ** (n - 2) / 2))


def contraction_ok(n: int, p: float) -> bool:
    """Whether concatenated rounds are guaranteed to drive the error rate to zero."""
    _check_p(p)
    return bool(p < contraction_bound(n, p))


def p_threshold(n: int) -> float:
    """``2 / (3 (n - 1))``: a p-independent threshold below which :func:`contraction_ok` holds."""
    if n < 3:
        raise ParameterError(f"n must be >= 3, got {n}")
    return 2.0 / (3.0 * (n - 1))


def round_step(n: int, p: float, model: ModelKind) -> float:
    if model is ModelKind.DISTANCE:
        return float(p1_distance_model(n, p))
    return float(chi_upper(n, p)) / n


# -- fixed points ------------------------------------------------------------


def _gap(n: int, p):
    return np.asarray(p1_distance_model(n, p)) - np.asarray(p)


def _bisect(f, lo: float, hi: float, flo: float) -> float:
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        fm = float(f(mid))
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fixed_points(n: int) -> list[float]:
    """Solutions of ``p1(p) = p`` on [0, 1], ascending."""
    if n not in (7, 15):
        raise ParameterError(f"fixed points are supported for n in {{7, 15}}, got {n}")
    grid = np.linspace(0.0, 1.0, ROOT_SCAN_CELLS + 1)
    vals = _gap(n, grid)
    zero = np.abs(vals) < 1e-14
    roots = [float(x) for x in grid[zero]]
    f = lambda x: _gap(n, x)
    for i in range(ROOT_SCAN_CELLS):
        if zero[i] or zero[i + 1]:
            continue
        if (vals[i] < 0) != (vals[i + 1] < 0):
            roots.append(float(_bisect(f, float(grid[i]), float(grid[i + 1]), float(vals[i]))))
    roots.sort()
    out: list[float] = []
    for r in roots:
        if not out or r - out[-1] > 1e-9:
            out.append(r)
    return out


def usable_interval(n: int) -> list[tuple[float, float]]:
    """Open intervals of p where one round strictly lowers the error rate."""
    pts = fixed_points(n)
    return [
        (lo, hi)
        for lo, hi in zip(pts, pts[1:])
        if float(_gap(n, 0.5 * (lo + hi))) < 0
    ]


# -- planning ----------------------------------------------------------------


@dataclass(frozen=True)
class RoundModel:
    n: int
    weights: WeightDistribution
    model_kind: ModelKind

    @classmethod
    def for_code(cls, code: CodeParams, kind: ModelKind = ModelKind.WORST_CASE) -> "RoundModel":
        return cls(code.n, weight_distribution_closed_form(code.n), kind)

    def step(self, p: float) -> float:
        return round_step(self.n, p, self.model_kind)


@dataclass(frozen=True)
class ReconciliationPlan:
    code: CodeParams
    depth_l: int
    channel_p: float
    predicted_alpha: float
    eta: Fraction
    model: ModelKind
    per_round: list[tuple[float, Fraction]] = field(default_factory=list)


def iterate_rates(code: CodeParams, p: float, rounds: int, model: ModelKind,
                  closed_form: bool = False) -> list[float]:
    """Error rate after each of ``rounds`` rounds, no stopping rule.

    ``closed_form`` (worst-case model only) steps with
    :func:`chi_upper_closed_form` instead of the cancellation-free sum.
    """
    if closed_form and model is not ModelKind.WORST_CASE:
        raise ParameterError("closed-form evaluation exists only for the worst-case model")
    rates = []
    for _ in range(rounds):
        p = chi_upper_closed_form(code.n, p) / code.n if closed_form else round_step(code.n, p, model)
        rates.append(p)
    return rates


def plan(
    code: CodeParams,
    p: float,
    target_alpha: float,
    model: ModelKind = ModelKind.WORST_CASE,
) -> ReconciliationPlan:
    """Smallest depth whose predicted error rate is at most ``target_alpha``."""
    _check_p(p)
    if not 0 < target_alpha < p:
        raise ParameterError(f"target_alpha must lie in (0, p={p}), got {target_alpha}")
    if model is ModelKind.WORST_CASE and not contraction_ok(code.n, p):
        raise PlanningError(
            f"p={p} violates the contraction condition for n={code.n} "
            f"(bound {contraction_bound(code.n, p):.6f}, threshold {p_threshold(code.n):.6f})",
            round_index=1,
        )
    rate = Fraction(code.k_info, code.n)
    rates: list[float] = []
    per_round: list[tuple[float, Fraction]] = []
    current = p
    while current > target_alpha:
        if len(rates) >= MAX_ROUNDS:
            raise PlanningError(
                f"target {target_alpha} not reached within {MAX_ROUNDS} rounds",
                round_index=MAX_ROUNDS, rates=rates,
            )
        nxt = round_step(code.n, current, model)
        if not nxt < current:
            raise PlanningError(
                f"round {len(rates) + 1} does not lower the error rate "
                f"({current:.6g} -> {nxt:.6g}); threshold {p_threshold(code.n):.6f}",
                round_index=len(rates) + 1, rates=rates,
            )
        rates.append(nxt)
        per_round.append((nxt, rate ** len(rates)))
        current = nxt
    depth = len(rates)
    return ReconciliationPlan(
        code=code,
        depth_l=depth,
        channel_p=p,
        predicted_alpha=current,
        eta=rate**depth,
        model=model,
        per_round=per_round,
    )


# -- curves ------------------------------------------------------------------


def curve_rows(n: int, samples: int) -> list[tuple[float, float]]:
    if samples < 2:
        raise ParameterError("samples must be >= 2")
    ps = np.linspace(0.0, 1.0, samples)
    return list(zip(ps.tolist(), np.asarray(p1_distance_model(n, ps)).tolist()))


def format_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, Fraction):
        v = float(v)
    return f"{float(v):.12g}"


def curve_csv(n: int, samples: int) -> str:
    return format_csv(["p", "p1"], curve_rows(n, samples))


# -- exact cross-check of the neighbour ratio -----------------------------------


def _signed_half_binomial(n: int, k: int) -> int:
    a = (k + 1) // 2
    sign = -1 if ((k + 2) // 2) % 2 else 1  # (-1)^ceil((k+1)/2)
    return sign * comb((n + 1) // 2, a)


def neighbour_ratio_closed_form(n: int, k: int) -> Fraction | None:
    """Closed form of the neighbour ratio from binomials alone; None for 0/0."""
    c_up = comb(n, k + 1) if k + 1 <= n else 0
    c_down = comb(n, k - 1) if k >= 1 else 0
    t = _signed_half_binomial(n, k)
    a = (k + 1) // 2
    num = Fraction(c_up - c_down + n * t)
    den = c_up + c_down + n * t * (1 - Fraction(4 * a, n + 1))
    if den == 0:
        return None if num == 0 else Fraction(0)
    return num / den


def ratio_closed_form_check(n: int) -> bool:
    """Compare the closed-form ratio with the one read off the weight distribution, exactly."""
    if n not in (7, 15, 31):
        raise ParameterError(f"n must be one of 7, 15, 31, got {n}")
    w = weight_distribution_closed_form(n)
    for k in range(n + 1):
        direct_zero = w[k - 1] + w[k + 1] == 0
        closed = neighbour_ratio_closed_form(n, k)
        if direct_zero:
            if closed is not None and closed != 0:
                return False
        elif closed is None or closed != neighbour_ratio(w, k):
            return False
    return True


# -- leakage -----------------------------------------------------------------


@dataclass(frozen=True)
class LeakageAccount:
    eavesdrop_rate: float
    raw_len: int
    depth_l: int
    leaked_bits_final: float
    leakage_rate_final: float


def leakage(eavesdrop_rate: float, raw_len: int, code: CodeParams, depth_l: int) -> LeakageAccount:
    """Eavesdropped bits surviving ``depth_l`` rounds of check-bit discarding."""
    _check_p(eavesdrop_rate)
    if raw_len < 0 or depth_l < 0:
        raise ParameterError("raw_len and depth_l must be non-negative")
    left = Fraction(code.k_info, code.n) ** depth_l
    return LeakageAccount(
        eavesdrop_rate=eavesdrop_rate,
        raw_len=raw_len,
        depth_l=depth_l,
        leaked_bits_final=float(left * Fraction(eavesdrop_rate) * raw_len),
        leakage_rate_final=eavesdrop_rate,
    )


# -- published tables ----------------------------------------------------------

TABLE_P = {
    1: (15, (0.01, 0.02, 0.04, 0.05, 0.06, 0.07, 0.08)),
    2: (7, (0.05, 0.07, 0.09, 0.10, 0.12, 0.13, 0.14)),
}


def depth_table(code: CodeParams, ps, target_alpha: float = 1e-9,
                model: ModelKind = ModelKind.DISTANCE) -> list[tuple[float, int, Fraction, float]]:
    """Rows ``(p, l, eta, alpha)`` for each channel rate in ``ps``."""
    rows = []
    for p in ps:
        pl = plan(code, p, target_alpha, model)
        rows.append((p, pl.depth_l, pl.eta, pl.predicted_alpha))
    return rows


def round_table(code: CodeParams, p: float = 0.03, rounds: int = 6,
                model: ModelKind = ModelKind.WORST_CASE,
                closed_form: bool = False) -> list[tuple[int, float, Fraction]]:
    """Rows ``(round, error_rate, left_rate)``; see :func:`iterate_rates` for ``closed_form``."""
    rate = Fraction(code.k_info, code.n)
    return [
        (i, r, rate**i)
        for i, r in enumerate(iterate_rates(code, p, rounds, model, closed_form), start=1)
    ]
