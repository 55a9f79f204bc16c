"""Monte-Carlo checks of the single-round bound, the gate, and end-to-end reconciliation.

    python scripts/run_validation.py [--blocks 1000000] [--trials 4] [--seed 0]
"""

import argparse
import time

from concat_ir import analysis as an
from concat_ir.codec import build_code
from concat_ir.protocol import ProtocolId, SessionConfig, gate_threshold
from concat_ir.sim import ChannelModel, end_to_end, monte_carlo_single_round


def single_round(blocks: int, seed: int) -> None:
    print("single round: empirical residual rate vs distance model vs worst-case bound")
    print(f"{'n':>3} {'p':>5} {'empirical':>11} {'stderr':>9} {'distance':>10} {'worst':>10}")
    for n in (7, 15):
        code = build_code(n.bit_length())
        for p in (0.01, 0.02, 0.03, 0.05):
            rep = monte_carlo_single_round(code, p, blocks, seed)
            print(f"{n:3d} {p:5.2f} {rep.post_round_error_rate:11.4e} {rep.post_round_stderr:9.1e} "
                  f"{an.p1_distance_model(n, p):10.4e} {an.chi_upper(n, p) / n:10.4e}")


def gate(trials: int, seed: int) -> None:
    code = build_code(4)
    cfg = SessionConfig(ProtocolId.SYNDROME_IR, code, 1, expected_p=0.03, gate_margin_delta=0.02)
    print(f"\ngate at 10^4 blocks, threshold {gate_threshold(cfg, 10**4):.4f}")
    for p in (0.02, 0.03, 0.04, 0.05, 0.08, 0.15):
        rep = end_to_end(cfg, 150_000, ChannelModel(p, seed), trials)
        print(f"  channel p={p:.2f}: aborted {rep.abort_count}/{trials}")


def protocols(trials: int, seed: int) -> None:
    code = build_code(4)
    print("\nend to end, [15,11,3], l=5, p=0.03")
    for pid in ProtocolId:
        cfg = SessionConfig(pid, code, 5, expected_p=0.03)
        start = time.perf_counter()
        rep = end_to_end(cfg, 15**5 * 16, ChannelModel(0.03, seed), trials)
        rates = ", ".join(f"{r:.2e}" for r in rep.per_round_error_rates)
        print(f"  protocol {int(pid)}: {rep.reconciled_bits} bits, {rep.mismatched_bits} mismatched, "
              f"{rep.abort_count} aborts, {time.perf_counter() - start:.1f} s"
              + (f"; per round {rates}" if rates else ""))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--blocks", type=int, default=10**6)
    parser.add_argument("--gate-trials", type=int, default=200)
    parser.add_argument("--trials", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    single_round(args.blocks, args.seed)
    gate(args.gate_trials, args.seed)
    protocols(args.trials, args.seed)


if __name__ == "__main__":
    main()
