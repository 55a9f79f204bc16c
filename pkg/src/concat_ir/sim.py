"""Binary symmetric channel, raw-key generation and Monte-Carlo trials.

Randomness comes from Philox streams keyed by ``(seed, trial, purpose)``, so
a trial's draws do not depend on which other trials ran or in what order.
"""

from __future__ import annotations

import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .auth import MacKey
from .codec import CodeParams, correct_one, encode
from .errors import ParameterError, ReconciliationAbort
from .protocol import ALICE, BOB, ProtocolId, SessionConfig, alice_syndrome_ir, bob_syndrome_ir

# stream purposes
_KEYS, _MAC, _ALICE, _BLOCKS = 0, 1, 2, 3
MC_CHUNK = 1 << 18


def stream(seed: int, *ids: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(i) for i in ids))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ChannelModel:
    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ParameterError(f"flip probability out of [0, 1]: {self.p}")


@dataclass(frozen=True)
class RawKeyPair:
    alice_key: np.ndarray
    bob_key: np.ndarray

    @property
    def errors(self) -> int:
        return int(np.count_nonzero(self.alice_key != self.bob_key))


def flip_mask(rng: np.random.Generator, shape, p: float) -> np.ndarray:
    if p <= 0:
        return np.zeros(shape, dtype=np.uint8)
    if p >= 1:
        return np.ones(shape, dtype=np.uint8)
    return (rng.random(shape) < p).astype(np.uint8)


def gen_raw_pair(length: int, channel: ChannelModel, trial: int = 0) -> RawKeyPair:
    """Uniform Alice key; Bob's key is Alice's through the channel."""
    if length < 1:
        raise ParameterError("length must be >= 1")
    rng = stream(channel.seed, trial, _KEYS)
    a = rng.integers(0, 2, length, dtype=np.uint8)
    return RawKeyPair(a, a ^ flip_mask(rng, length, channel.p))


@dataclass(frozen=True)
class TrialReport:
    trials: int
    input_error_rate: float
    post_round_error_rate: float
    post_round_stderr: float = 0.0
    end_to_end_mismatch_count: int = 0
    abort_count: int = 0
    mismatched_bits: int = 0
    reconciled_bits: int = 0
    per_round_error_rates: tuple[float, ...] = ()
    wall_time: float = field(default=0.0, compare=False)

    def to_csv(self) -> str:
        """Two-line CSV of every field except wall time."""
        names = [f.name for f in fields(self) if f.name != "wall_time"]
        buf = io.StringIO()
        buf.write(",".join(names) + "\n")
        vals = []
        for name in names:
            v = getattr(self, name)
            if isinstance(v, tuple):
                vals.append(";".join(f"{x:.12g}" for x in v))
            elif isinstance(v, float):
                vals.append(f"{v:.12g}")
            else:
                vals.append(str(v))
        buf.write(",".join(vals) + "\n")
        return buf.getvalue()


def monte_carlo_single_round(code: CodeParams, p: float, blocks: int, seed: int = 0) -> TrialReport:
    """Send random codewords through the channel, correct once, count residual bit errors."""
    if blocks < 1:
        raise ParameterError("blocks must be >= 1")
    ChannelModel(p, seed)
    start = time.perf_counter()
    in_err = 0
    total = 0
    total_sq = 0
    done = 0
    chunk_id = 0
    while done < blocks:
        b = min(MC_CHUNK, blocks - done)
        rng = stream(seed, chunk_id, _BLOCKS)
        c = encode(code, rng.integers(0, 2, (b, code.k_info), dtype=np.uint8))
        e = flip_mask(rng, c.shape, p)
        fixed, _ = correct_one(code, c ^ e)
        residual = np.count_nonzero(fixed != c, axis=1).astype(np.int64)
        in_err += int(e.sum(dtype=np.int64))
        total += int(residual.sum())
        total_sq += int((residual * residual).sum())
        done += b
        chunk_id += 1
    mean = total / blocks
    var = max(total_sq / blocks - mean * mean, 0.0)
    stderr = (var / blocks) ** 0.5 / code.n
    return TrialReport(
        trials=blocks,
        input_error_rate=in_err / (blocks * code.n),
        post_round_error_rate=mean / code.n,
        post_round_stderr=stderr,
        wall_time=time.perf_counter() - start,
    )


@dataclass(frozen=True)
class _TrialResult:
    input_errors: int
    raw_len: int
    aborted: bool
    mismatched_bits: int
    final_len: int
    round_errors: tuple[int, ...]
    round_lens: tuple[int, ...]


def _run_trial(cfg: SessionConfig, raw_len: int, channel: ChannelModel, trial: int) -> _TrialResult:
    keys = gen_raw_pair(raw_len, channel, trial)
    alice_mac = MacKey.generate(cfg.mac_width_m, stream(channel.seed, trial, _MAC))
    bob_mac = alice_mac.copy()
    seed = stream(channel.seed, trial, _ALICE)
    pid = cfg.protocol_id

    a_trace: list = []
    b_trace: list = []
    if pid is ProtocolId.SYNDROME_IR:
        final_a, packet = alice_syndrome_ir(keys.alice_key, cfg, alice_mac, trace=a_trace)
    else:
        final_a, packet = ALICE[pid](keys.alice_key, cfg, alice_mac, seed)
    # The packet is the only thing that crosses from Alice to Bob.
    try:
        if pid is ProtocolId.SYNDROME_IR:
            final_b = bob_syndrome_ir(keys.bob_key, packet, cfg, bob_mac, trace=b_trace)
        else:
            final_b = BOB[pid](keys.bob_key, packet, cfg, bob_mac)
    except ReconciliationAbort:
        return _TrialResult(keys.errors, raw_len, True, 0, final_a.size, (), ())

    for j, (sa, sb) in enumerate(zip(a_trace, b_trace), start=1):
        if sa.size != sb.size:
            raise AssertionError(f"round {j}: Alice keeps {sa.size} bits, Bob {sb.size}")
    if final_a.size != final_b.size:
        raise AssertionError(f"final keys differ in length: {final_a.size} vs {final_b.size}")
    return _TrialResult(
        input_errors=keys.errors,
        raw_len=raw_len,
        aborted=False,
        mismatched_bits=int(np.count_nonzero(final_a != final_b)),
        final_len=int(final_a.size),
        round_errors=tuple(int(np.count_nonzero(a != b)) for a, b in zip(a_trace, b_trace)),
        round_lens=tuple(int(a.size) for a in a_trace),
    )


def end_to_end(cfg: SessionConfig, raw_len: int, channel: ChannelModel, trials: int,
               workers: int = 1) -> TrialReport:
    """Run ``trials`` independent sessions and reduce the results in trial order."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    start = time.perf_counter()
    args = [(cfg, raw_len, channel, i) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_trial, *zip(*args)))
    else:
        results = [_run_trial(*a) for a in args]

    done = [r for r in results if not r.aborted]
    mismatched = sum(r.mismatched_bits for r in done)
    reconciled = sum(r.final_len for r in done)
    per_round: tuple[float, ...] = ()
    if done and done[0].round_lens:
        errs = np.sum([r.round_errors for r in done], axis=0)
        lens = np.sum([r.round_lens for r in done], axis=0)
        per_round = tuple(float(e) / float(l) for e, l in zip(errs, lens))
    return TrialReport(
        trials=trials,
        input_error_rate=sum(r.input_errors for r in results) / (raw_len * trials),
        post_round_error_rate=mismatched / reconciled if reconciled else 0.0,
        end_to_end_mismatch_count=sum(1 for r in done if r.mismatched_bits),
        abort_count=len(results) - len(done),
        mismatched_bits=mismatched,
        reconciled_bits=reconciled,
        per_round_error_rates=per_round,
        wall_time=time.perf_counter() - start,
    )
