import numpy as np
import pytest

from concat_ir.analysis import chi_upper
from concat_ir.codec import build_code
from concat_ir.errors import ParameterError
from concat_ir.protocol import ProtocolId, SessionConfig
from concat_ir.sim import ChannelModel, TrialReport, end_to_end, gen_raw_pair, monte_carlo_single_round, stream

C7, C15 = build_code(3), build_code(4)


def test_gen_raw_pair_extremes():
    same = gen_raw_pair(1000, ChannelModel(0.0, 1))
    assert np.array_equal(same.alice_key, same.bob_key)
    flipped = gen_raw_pair(1000, ChannelModel(1.0, 1))
    assert np.array_equal(flipped.alice_key ^ 1, flipped.bob_key)
    assert 400 < same.alice_key.sum() < 600


def test_gen_raw_pair_error_count_within_5_sigma():
    pair = gen_raw_pair(10**6, ChannelModel(0.03, 2))
    sigma = np.sqrt(10**6 * 0.03 * 0.97)
    assert sigma == pytest.approx(170.6, abs=0.1)
    assert abs(pair.errors - 30_000) < 5 * sigma


def test_gen_raw_pair_deterministic_and_trial_independent():
    ch = ChannelModel(0.1, 5)
    a, b = gen_raw_pair(500, ch, 3), gen_raw_pair(500, ch, 3)
    assert np.array_equal(a.alice_key, b.alice_key) and np.array_equal(a.bob_key, b.bob_key)
    assert not np.array_equal(a.alice_key, gen_raw_pair(500, ch, 4).alice_key)


def test_channel_validation():
    with pytest.raises(ParameterError):
        ChannelModel(1.5)
    with pytest.raises(ParameterError):
        gen_raw_pair(0, ChannelModel(0.1))


def test_streams_are_distinct():
    assert stream(0, 1, 2).integers(2**62) != stream(0, 2, 1).integers(2**62)
    assert stream(0, 1, 2).integers(2**62) == stream(0, 1, 2).integers(2**62)


def test_monte_carlo_noiseless():
    rep = monte_carlo_single_round(C15, 0.0, 1000)
    assert rep.post_round_error_rate == 0 and rep.input_error_rate == 0


@pytest.mark.parametrize("code, p", [(C15, 0.03), (C7, 0.03)])
def test_monte_carlo_below_worst_case(code, p):
    rep = monte_carlo_single_round(code, p, 200_000, seed=1)
    assert rep.post_round_error_rate <= chi_upper(code.n, p) / code.n + 5 * rep.post_round_stderr
    assert rep.input_error_rate == pytest.approx(p, rel=0.05)


def test_monte_carlo_n7_inside_usable_interval():
    rep = monte_carlo_single_round(C7, 0.1, 10**6, seed=3)
    assert rep.post_round_error_rate < 0.1
    assert rep.post_round_error_rate == pytest.approx(0.06688, abs=5 * rep.post_round_stderr)


def test_monte_carlo_reproducible():
    assert monte_carlo_single_round(C7, 0.05, 300_000, 9) == monte_carlo_single_round(C7, 0.05, 300_000, 9)


@pytest.mark.parametrize("pid", list(ProtocolId))
def test_end_to_end_noiseless(pid):
    cfg = SessionConfig(pid, C15, 2, expected_p=0.0)
    rep = end_to_end(cfg, 450, ChannelModel(0.0, 1), 3)
    assert rep.end_to_end_mismatch_count == 0 and rep.abort_count == 0
    assert rep.reconciled_bits == 3 * (242 if pid is ProtocolId.KEY_REDISTRIBUTION else
                                       450 if pid is ProtocolId.MAYERS_ECC else 242)


def test_end_to_end_protocol1_rates_decrease():
    cfg = SessionConfig(ProtocolId.SYNDROME_IR, C15, 5, expected_p=0.03)
    rep = end_to_end(cfg, 759375, ChannelModel(0.03, 7), 2)
    assert rep.abort_count == 0 and rep.end_to_end_mismatch_count == 0
    rates = (rep.input_error_rate,) + rep.per_round_error_rates
    nonzero = [r for r in rates if r > 0]
    assert all(b < a for a, b in zip(nonzero, nonzero[1:]))
    assert rates[1] == pytest.approx(0.0153, rel=0.1)


def test_end_to_end_gate_aborts_bad_channel():
    cfg = SessionConfig(ProtocolId.SYNDROME_IR, C15, 1, expected_p=0.03)
    rep = end_to_end(cfg, 15_000, ChannelModel(0.15, 2), 20)
    assert rep.abort_count == 20 and rep.reconciled_bits == 0


def test_end_to_end_reproducible_and_parallel_safe():
    cfg = SessionConfig(ProtocolId.KEY_REDISTRIBUTION, C7, 3)
    serial = end_to_end(cfg, 343 * 4, ChannelModel(0.02, 11), 6)
    assert serial == end_to_end(cfg, 343 * 4, ChannelModel(0.02, 11), 6)
    assert serial == end_to_end(cfg, 343 * 4, ChannelModel(0.02, 11), 6, workers=2)
    assert serial.to_csv() == end_to_end(cfg, 343 * 4, ChannelModel(0.02, 11), 6).to_csv()


def test_report_csv_shape():
    text = TrialReport(2, 0.1, 0.01, per_round_error_rates=(0.5, 0.25)).to_csv()
    header, row = text.splitlines()
    assert "wall_time" not in header
    assert len(header.split(",")) == len(row.split(","))
    assert row.endswith("0.5;0.25")
