"""Alice/Bob state machines for the three concatenated one-way reconciliation protocols.

Every protocol sends exactly one authenticated packet from Alice to Bob. Bob
either returns his final key or raises a :class:`ReconciliationAbort`
subclass, which is the single bit he may send back.

Protocol 1 (syndrome)
    Each round: permute the full-block body with the wire-link permutation,
    publish every block's syndrome, drop the check positions. Bob mirrors the
    rounds and flips the bit named by each relative syndrome.
Protocol 2 (key redistribution)
    Alice encodes a fresh random string through ``l`` encode rounds with a
    permutation between consecutive rounds, and sends it padded with her raw
    key. Bob strips the pad with his raw key and decodes round by round. The
    random string is the shared key.
Protocol 3 (code-based, Alice's raw key is the shared key)
    Same packet as protocol 2; Bob re-encodes his decoded string and strips
    it off the payload to recover Alice's raw key.

Packet layout (multi-byte integers big-endian, bits MSB-first)::

    0-3   magic "QIR1"        4  version (1)       5  protocol id
    6     k_chk               7  depth l           8  MAC width in bits
    9-12  payload bit length  13.. payload (zero-padded to a byte)
    ...   MAC over every preceding byte (width/8 bytes)

Protocol 1 payload is one bit stream: per round a 32-bit block count
followed by that many ``k_chk``-bit syndromes. Protocols 2 and 3 carry the
masked codeword string.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .auth import MacKey, Tag, mac_tag, mac_verify
from .codec import (
    CodeParams,
    build_code,
    correct_one,
    encode,
    extract_info,
    flip_positions,
    syndrome,
    syndrome_value,
)
from .errors import (
    AuthenticationAbort,
    BadMagicError,
    BadVersionError,
    MacMismatchError,
    MalformedPacketError,
    PacketError,
    ParameterError,
    QualityAbort,
    TruncatedPacketError,
)
from .permute import WlpShape, permute_round, wlp_apply, wlp_inverse

MAGIC = b"QIR1"
VERSION = 1
HEADER = struct.Struct(">4sBBBBBI")
COUNT_BITS = 32


class ProtocolId(enum.IntEnum):
    SYNDROME_IR = 1
    KEY_REDISTRIBUTION = 2
    MAYERS_ECC = 3


@dataclass(frozen=True)
class SessionConfig:
    protocol_id: ProtocolId
    code: CodeParams
    depth_l: int
    mac_width_m: int = 64
    expected_p: float = 0.03
    gate_margin_delta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "protocol_id", ProtocolId(self.protocol_id))
        if self.depth_l < 1 or self.depth_l > 255:
            raise ParameterError(f"depth_l must be in [1, 255], got {self.depth_l}")
        if self.mac_width_m % 8 or not 16 <= self.mac_width_m <= 128:
            raise ParameterError(f"MAC width must be a multiple of 8 in [16, 128], got {self.mac_width_m}")
        if not 0 <= self.expected_p <= 1:
            raise ParameterError(f"expected_p out of range: {self.expected_p}")


def _bits(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.uint8)
    if a.ndim != 1:
        raise ParameterError("keys are one-dimensional bit vectors")
    return a


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


# -- packet ------------------------------------------------------------------


@dataclass
class IrPacket:
    protocol_id: ProtocolId
    k_chk: int
    depth_l: int
    mac_width: int
    payload: np.ndarray = field(repr=False)
    tag: Tag | None = None
    version: int = VERSION

    @property
    def payload_bit_length(self) -> int:
        return int(self.payload.size)

    def signed_bytes(self) -> bytes:
        header = HEADER.pack(MAGIC, self.version, int(self.protocol_id), self.k_chk,
                             self.depth_l, self.mac_width, self.payload_bit_length)
        return header + np.packbits(self.payload).tobytes()

    def to_bytes(self) -> bytes:
        if self.tag is None:
            raise ParameterError("packet has no MAC")
        return self.signed_bytes() + self.tag.to_bytes()

    def verify(self, key: MacKey) -> bool:
        return self.tag is not None and mac_verify(self.signed_bytes(), self.tag, key)


def _check_payload_shape(pkt: IrPacket) -> None:
    code = build_code(pkt.k_chk)
    if pkt.protocol_id is ProtocolId.SYNDROME_IR:
        SyndromeSet.from_payload(pkt.payload, code, pkt.depth_l)
    else:
        unit = code.n**pkt.depth_l
        if pkt.payload_bit_length == 0 or pkt.payload_bit_length % unit:
            raise MalformedPacketError(
                f"payload of {pkt.payload_bit_length} bits is not a positive multiple of n^l = {unit}"
            )


def packet_encode(pkt: IrPacket, key: MacKey) -> bytes:
    """Fill in the MAC (consuming ``key``) and serialise."""
    if key.width != pkt.mac_width:
        raise ParameterError(f"key width {key.width} != packet MAC width {pkt.mac_width}")
    pkt.tag = mac_tag(pkt.signed_bytes(), key)
    return pkt.to_bytes()


def packet_decode(data: bytes, key: MacKey | None = None) -> IrPacket:
    """Parse a packet; with ``key`` also check its MAC."""
    data = bytes(data)
    if len(data) < len(MAGIC):
        raise TruncatedPacketError(f"{len(data)} bytes is shorter than the magic")
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}")
    if len(data) < HEADER.size:
        raise TruncatedPacketError(f"{len(data)} bytes is shorter than the {HEADER.size}-byte header")
    _, version, pid, k_chk, depth, mac_width, nbits = HEADER.unpack_from(data)
    if version != VERSION:
        raise BadVersionError(f"unsupported version {version}")
    try:
        pid = ProtocolId(pid)
    except ValueError:
        raise MalformedPacketError(f"unknown protocol id {pid}") from None
    if mac_width % 8 or not 16 <= mac_width <= 128:
        raise MalformedPacketError(f"invalid MAC width {mac_width}")
    if not 2 <= k_chk <= 12 or depth < 1:
        raise MalformedPacketError(f"invalid code/depth fields k_chk={k_chk}, l={depth}")
    nbytes = (nbits + 7) // 8
    total = HEADER.size + nbytes + mac_width // 8
    if len(data) < total:
        raise TruncatedPacketError(f"need {total} bytes, got {len(data)}")
    if len(data) > total:
        raise MalformedPacketError(f"{len(data) - total} trailing bytes")
    raw = np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=HEADER.size)
    bits = np.unpackbits(raw)
    if bits[nbits:].any():
        raise MalformedPacketError("non-zero padding bits")
    pkt = IrPacket(pid, k_chk, depth, mac_width, bits[:nbits].copy(),
                   Tag.from_bytes(data[total - mac_width // 8:], mac_width), version)
    if key is not None and not pkt.verify(key):
        raise MacMismatchError("MAC does not verify")
    _check_payload_shape(pkt)
    return pkt


def _receive(data: bytes, cfg: SessionConfig, key: MacKey) -> IrPacket:
    try:
        pkt = packet_decode(data, key)
    except PacketError as exc:
        raise AuthenticationAbort(f"{type(exc).__name__}: {exc}") from exc
    if (pkt.protocol_id, pkt.k_chk, pkt.depth_l) != (cfg.protocol_id, cfg.code.k_chk, cfg.depth_l):
        raise ParameterError(
            f"packet is for protocol {int(pkt.protocol_id)} k_chk={pkt.k_chk} l={pkt.depth_l}, "
            f"session expects {int(cfg.protocol_id)} k_chk={cfg.code.k_chk} l={cfg.depth_l}"
        )
    return pkt


def _check_alice(cfg: SessionConfig, pid: ProtocolId, key: MacKey) -> None:
    if cfg.protocol_id is not pid:
        raise ParameterError(f"session is configured for protocol {int(cfg.protocol_id)}, not {int(pid)}")
    if key.width != cfg.mac_width_m:
        raise ParameterError(f"MAC key width {key.width} != configured {cfg.mac_width_m}")


# -- protocol 1: syndromes ---------------------------------------------------------


@dataclass
class SyndromeSet:
    """Per-round syndromes, each round an ``(m_j, k_chk)`` bit array."""

    rounds: list[np.ndarray]

    @property
    def block_counts(self) -> list[int]:
        return [int(r.shape[0]) for r in self.rounds]

    def to_payload(self) -> np.ndarray:
        parts = []
        for r in self.rounds:
            parts.append(np.unpackbits(np.frombuffer(struct.pack(">I", r.shape[0]), dtype=np.uint8)))
            parts.append(r.reshape(-1).astype(np.uint8))
        return np.concatenate(parts)

    @classmethod
    def from_payload(cls, bits: np.ndarray, code: CodeParams, depth_l: int) -> "SyndromeSet":
        rounds, pos = [], 0
        for j in range(depth_l):
            if pos + COUNT_BITS > bits.size:
                raise MalformedPacketError(f"payload ends inside round {j + 1}'s block count")
            count = int.from_bytes(np.packbits(bits[pos:pos + COUNT_BITS]).tobytes(), "big")
            pos += COUNT_BITS
            end = pos + count * code.k_chk
            if end > bits.size:
                raise MalformedPacketError(f"payload ends inside round {j + 1}'s syndromes")
            rounds.append(bits[pos:end].reshape(count, code.k_chk))
            pos = end
        if pos != bits.size:
            raise MalformedPacketError(f"{bits.size - pos} unexpected payload bits after round {depth_l}")
        return cls(rounds)

    def values(self, j: int) -> np.ndarray:
        k = self.rounds[j].shape[1]
        w = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
        return self.rounds[j].astype(np.int64) @ w


def _shrink(code: CodeParams, blocks: np.ndarray, rest: np.ndarray) -> np.ndarray:
    return np.concatenate([extract_info(code, blocks).reshape(-1), rest])


def alice_syndrome_ir(raw_key, cfg: SessionConfig, mac_key: MacKey,
                      trace: list | None = None) -> tuple[np.ndarray, bytes]:
    """Alice's side of protocol 1. Returns ``(final_key, packet_bytes)``.

    ``trace``, if given, receives the surviving string after each round.
    """
    _check_alice(cfg, ProtocolId.SYNDROME_IR, mac_key)
    code, s = cfg.code, _bits(raw_key)
    if s.size < code.n**2:
        raise ParameterError(f"raw key of {s.size} bits is shorter than n^2 = {code.n ** 2}")
    rounds = []
    for j in range(cfg.depth_l):
        blocks, rest = permute_round(s, code.n)
        if blocks.shape[0] == 0:
            raise ParameterError(
                f"raw key of {np.size(raw_key)} bits runs out of full blocks in round {j + 1} of {cfg.depth_l}"
            )
        rounds.append(syndrome(code, blocks))
        s = _shrink(code, blocks, rest)
        if trace is not None:
            trace.append(s)
    pkt = IrPacket(ProtocolId.SYNDROME_IR, code.k_chk, cfg.depth_l, cfg.mac_width_m,
                   SyndromeSet(rounds).to_payload())
    return s, packet_encode(pkt, mac_key)


@dataclass(frozen=True)
class GateResult:
    accept: bool
    zero_fraction: float
    threshold: float

    def __bool__(self) -> bool:
        return self.accept


def gate_threshold(cfg: SessionConfig, blocks: int) -> float:
    """Lowest acceptable zero-syndrome fraction for ``blocks`` round-1 blocks.

    Without an explicit margin, three binomial standard deviations of the
    fraction are allowed below its expectation ``(1 - p)^n``.
    """
    q = (1.0 - cfg.expected_p) ** cfg.code.n
    delta = cfg.gate_margin_delta
    if delta is None:
        delta = 3.0 * math.sqrt(q * (1.0 - q) / max(blocks, 1))
    return q - delta


def syndrome_gate(relative_syndromes, cfg: SessionConfig) -> GateResult:
    """Accept iff the fraction of zero round-1 relative syndromes clears :func:`gate_threshold`.

    ``relative_syndromes`` is either per-block integers or an ``(m, k_chk)`` bit array.
    """
    rel = np.asarray(relative_syndromes)
    nonzero = rel.any(axis=1) if rel.ndim == 2 else rel != 0
    blocks = int(nonzero.size)
    z = 1.0 - float(nonzero.sum()) / blocks if blocks else 1.0
    threshold = gate_threshold(cfg, blocks)
    return GateResult(z >= threshold, z, threshold)


def bob_syndrome_ir(raw_key, packet: bytes, cfg: SessionConfig, mac_key: MacKey,
                    trace: list | None = None) -> np.ndarray:
    """Bob's side of protocol 1.

    Raises
    ------
    AuthenticationAbort
        The packet MAC does not verify.
    QualityAbort
        Too few round-1 blocks agree for the configured channel error rate.
    """
    pkt = _receive(packet, cfg, mac_key)
    code, s = cfg.code, _bits(raw_key)
    synd = SyndromeSet.from_payload(pkt.payload, code, cfg.depth_l)
    for j in range(cfg.depth_l):
        blocks, rest = permute_round(s, code.n)
        if blocks.shape[0] != synd.block_counts[j]:
            raise ParameterError(
                f"round {j + 1}: Bob has {blocks.shape[0]} blocks, Alice published {synd.block_counts[j]}"
            )
        rel = syndrome_value(code, blocks) ^ synd.values(j)
        if j == 0:
            gate = syndrome_gate(rel, cfg)
            if not gate:
                raise QualityAbort(
                    f"zero-syndrome fraction {gate.zero_fraction:.4f} below {gate.threshold:.4f}",
                    gate.zero_fraction, gate.threshold,
                )
        s = _shrink(code, flip_positions(blocks, rel), rest)
        if trace is not None:
            trace.append(s)
    return s


# -- protocols 2 and 3: concatenated encoding -----------------------------------------


def valid_length(code: CodeParams, depth_l: int, length: int) -> bool:
    unit = code.n**depth_l
    return length >= unit and length % unit == 0


def _require_length(code: CodeParams, depth_l: int, length: int) -> int:
    unit = code.n**depth_l
    if not valid_length(code, depth_l, length):
        lo = (length // unit) * unit
        near = [x for x in (lo, lo + unit) if x > 0]
        raise ParameterError(
            f"raw key length {length} must be a multiple of n^l = {unit}; "
            f"nearest valid: {' or '.join(map(str, near))}"
        )
    return length // unit


def concatenated_encode(code: CodeParams, r, depth_l: int, trace: list | None = None) -> np.ndarray:
    """Encode ``r`` through ``depth_l`` rounds, permuting between rounds but not after the last."""
    s = _bits(r)
    if s.size % code.k_info:
        raise ParameterError(f"length {s.size} is not a multiple of k_info = {code.k_info}")
    for j in range(depth_l):
        if s.size % code.k_info:
            raise ParameterError(f"round {j + 1}: length {s.size} not divisible by {code.k_info}")
        c = encode(code, s.reshape(-1, code.k_info))
        s = c.reshape(-1)
        if j < depth_l - 1:
            s = wlp_apply(s, WlpShape(c.shape[0], code.n))
        if trace is not None:
            trace.append(s)
    return s


def concatenated_decode(code: CodeParams, word, depth_l: int, trace: list | None = None) -> np.ndarray:
    """Undo :func:`concatenated_encode` on a noisy string, correcting one error per block per round."""
    s = _bits(word)
    for j in range(depth_l, 0, -1):
        if s.size % code.n:
            raise ParameterError(f"round {j}: length {s.size} not divisible by {code.n}")
        fixed, _ = correct_one(code, s.reshape(-1, code.n))
        s = extract_info(code, fixed).reshape(-1)
        if j > 1:
            s = wlp_inverse(s, WlpShape(s.size // code.n, code.n))
        if trace is not None:
            trace.append(s)
    return s


def _alice_encoding(raw_key, cfg: SessionConfig, mac_key: MacKey, rng_seed,
                    pid: ProtocolId) -> tuple[np.ndarray, bytes]:
    _check_alice(cfg, pid, mac_key)
    code, k_a = cfg.code, _bits(raw_key)
    t = _require_length(code, cfg.depth_l, k_a.size)
    r = _rng(rng_seed).integers(0, 2, code.k_info**cfg.depth_l * t, dtype=np.uint8)
    c = concatenated_encode(code, r, cfg.depth_l)
    pkt = IrPacket(pid, code.k_chk, cfg.depth_l, cfg.mac_width_m, c ^ k_a)
    return r, packet_encode(pkt, mac_key)


def alice_key_redistribution(raw_key, cfg: SessionConfig, mac_key: MacKey,
                             rng_seed=0) -> tuple[np.ndarray, bytes]:
    """Protocol 2, Alice. Returns ``(r_A, packet_bytes)``; ``r_A`` is her final key."""
    return _alice_encoding(raw_key, cfg, mac_key, rng_seed, ProtocolId.KEY_REDISTRIBUTION)


def _bob_decode(raw_key, packet: bytes, cfg: SessionConfig, mac_key: MacKey) -> tuple[np.ndarray, IrPacket]:
    pkt = _receive(packet, cfg, mac_key)
    k_b = _bits(raw_key)
    if k_b.size != pkt.payload_bit_length:
        raise ParameterError(f"raw key of {k_b.size} bits vs payload of {pkt.payload_bit_length}")
    return concatenated_decode(cfg.code, pkt.payload ^ k_b, cfg.depth_l), pkt


def bob_key_redistribution(raw_key, packet: bytes, cfg: SessionConfig, mac_key: MacKey) -> np.ndarray:
    """Protocol 2, Bob. Returns his estimate of Alice's random string."""
    r_b, _ = _bob_decode(raw_key, packet, cfg, mac_key)
    return r_b


def alice_mayers(raw_key, cfg: SessionConfig, mac_key: MacKey,
                 rng_seed=0) -> tuple[np.ndarray, bytes]:
    """Protocol 3, Alice. Same transmission as protocol 2; her final key is her raw key."""
    _, packet = _alice_encoding(raw_key, cfg, mac_key, rng_seed, ProtocolId.MAYERS_ECC)
    return _bits(raw_key).copy(), packet


def bob_mayers(raw_key, packet: bytes, cfg: SessionConfig, mac_key: MacKey) -> np.ndarray:
    """Protocol 3, Bob. Decode, re-encode, and strip the codeword off the payload."""
    r_b, pkt = _bob_decode(raw_key, packet, cfg, mac_key)
    return pkt.payload ^ concatenated_encode(cfg.code, r_b, cfg.depth_l)


ALICE = {
    ProtocolId.SYNDROME_IR: lambda raw, cfg, key, seed: alice_syndrome_ir(raw, cfg, key),
    ProtocolId.KEY_REDISTRIBUTION: alice_key_redistribution,
    ProtocolId.MAYERS_ECC: alice_mayers,
}
BOB = {
    ProtocolId.SYNDROME_IR: bob_syndrome_ir,
    ProtocolId.KEY_REDISTRIBUTION: bob_key_redistribution,
    ProtocolId.MAYERS_ECC: bob_mayers,
}
