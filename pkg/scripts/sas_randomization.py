"""SAS distributed Alamouti: plain vs randomized, synchronized and with profile [0,1]."""
import argparse
from pathlib import Path

from dtdstc.cli import emit_csv
from dtdstc.experiments import TARGET_BER, sas_randomization_config, snr_gaps
from dtdstc.simulator import ber_slope, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/sas_randomization"))
    ap.add_argument("--trials", type=int, default=300_000)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    for delays in [(0, 0), (0, 1)]:
        cfg = sas_randomization_config(delays, trials_per_point=args.trials, seed=args.seed)
        res = run_sweep(cfg)
        tag = "".join(map(str, delays))
        emit_csv(res, args.out / f"sas_delay{tag}.csv")
        gaps = snr_gaps(res, "DAlamouti")
        for scheme in cfg.schemes:
            snr, ber = res.curve(scheme)
            print(f"delays={delays} {scheme.value:10s} gain@{TARGET_BER:g} vs DAlamouti "
                  f"{gaps[scheme.value]:+.2f} dB, slope 16-20 dB {ber_slope(snr, ber, 16, 20):.2f}")


if __name__ == "__main__":
    main()
