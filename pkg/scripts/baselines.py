"""Synchronized SAS/MAS baselines with and without the direct link; one CSV per setup."""
import argparse
from pathlib import Path

from dtdstc.cli import emit_csv
from dtdstc.experiments import TARGET_BER, baseline_configs
from dtdstc.simulator import run_sweep, snr_at_ber


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/baselines"))
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    for name, cfg in baseline_configs(trials_per_point=args.trials, seed=args.seed).items():
        res = run_sweep(cfg)
        emit_csv(res, args.out / f"{name}.csv")
        snr, ber = res.curve(cfg.scheme)
        print(f"{name:18s} SNR@{TARGET_BER:g} = {snr_at_ber(snr, ber, TARGET_BER):6.2f} dB "
              f"({res.duration_s:.1f} s)")


if __name__ == "__main__":
    main()
