"""Command-line front end: ``dtdstc --mode sweep|verify|compare``."""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import sys
from pathlib import Path

from .simulator import RunResult, run_sweep, snr_at_ber
from .system_model import (
    ConfigError,
    RelayStrategy,
    Scheme,
    SystemConfig,
    Topology,
    validate_config,
)

SECTIONS = {
    "system": ("topology", "n_r", "N", "T", "direct_link", "relay_strategy", "scheme", "P_R",
               "sigma_s2", "snr_grid_db", "trials_per_point", "seed"),
    "delays": ("delays",),
    "optimizer": ("adapt", "forgetting", "delta_init", "warmup_blocks"),
    "sweep": ("schemes", "min_errors", "chains", "batch_size", "first_hop_noisy"),
}
_FIELDS = {f.name: f for f in dataclasses.fields(SystemConfig)}
CSV_HEADER = ["scheme", "delay_profile", "snr_db", "bits", "errors", "ber"]


class ConfigParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _split_list(value: str) -> list[str]:
    value = value.strip()
    if value.startswith("[") and value.endswith("]"):
        value = value[1:-1]
    return [v.strip() for v in value.split(",") if v.strip()]


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def convert_value(key: str, value: str):
    """Convert one textual value to the type of SystemConfig field ``key``."""
    if key not in _FIELDS:
        raise ConfigParseError(f"unknown key {key!r}")
    try:
        if key == "topology":
            return Topology(value.strip().upper())
        if key == "relay_strategy":
            return RelayStrategy(value.strip().upper())
        if key == "scheme":
            return Scheme(value.strip())
        if key == "schemes":
            return tuple(Scheme(v) for v in _split_list(value))
        if key == "delays":
            return tuple(int(v) for v in _split_list(value))
        if key == "snr_grid_db":
            return tuple(float(v) for v in _split_list(value))
        if key in ("direct_link", "adapt", "first_hop_noisy"):
            return _parse_bool(value)
        if key in ("P_R", "sigma_s2", "forgetting", "delta_init"):
            return float(value)
        return int(value)
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {value!r}: {exc}") from None


def _line_of(text: str, key: str) -> int | None:
    for n, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.split("=", 1)[0].split(":", 1)[0].strip() == key:
            return n
    return None


def parse_config(text: str, overrides=()) -> SystemConfig:
    """Parse an INI document with [system] [delays] [optimizer] [sweep] sections.

    Unknown sections or keys are rejected with their line number. ``overrides``
    are ``key=value`` strings applied on top (``section.key`` is also accepted).
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive (N vs n_r)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError("missing section header", exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigParseError("malformed line", line) from None
    except configparser.Error as exc:
        raise ConfigParseError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigParseError(f"unknown section [{section}]", _line_of(text, f"[{section}]"))
        for key, value in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigParseError(f"unknown key {key!r} in [{section}]", _line_of(text, key))
            values[key] = convert_value(key, value)
    for item in overrides:
        if "=" not in item:
            raise ConfigParseError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        key = key.strip().split(".")[-1]
        values[key] = convert_value(key, value)
    return validate_config(SystemConfig(**values))


def emit_csv(result: RunResult, path) -> Path:
    """Write one row per BerPoint; floats use the shortest exact decimal form."""
    if not result.points:
        raise ValueError("empty result")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for p in result.points:
            w.writerow([p.scheme, p.delay_profile, repr(p.snr_db), p.bits, p.errors, repr(p.ber)])
    return path


def _compare_summary(result: RunResult, target: float = 1e-3) -> list[str]:
    lines = []
    ref = None
    for scheme in result.config.sweep_schemes:
        snr, ber = result.curve(scheme)
        at = snr_at_ber(snr, ber, target)
        if ref is None:
            ref = at
        lines.append(f"{Scheme(scheme).value}: SNR@{target:g} = {at:.2f} dB "
                     f"(gain vs {Scheme(result.config.sweep_schemes[0]).value}: {ref - at:+.2f} dB)")
    return lines


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with status 1
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dtdstc", description="Delay-tolerant distributed STC simulator")
    p.add_argument("--config", type=Path, help="INI run configuration")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a configuration key (repeatable)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--mode", choices=("sweep", "verify", "compare"), default="sweep")
    p.add_argument("--seed", type=int, help="64-bit seed (overrides the config)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.mode == "verify":
        from .verify import run_suites
        results = run_suites()
        for r in results:
            print(r.line())
        failed = [r.name for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} suites passed")
        return 2 if failed else 0
    overrides = list(args.overrides)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            print("dtdstc: error: seed must fit in 64 bits", file=sys.stderr)
            return 1
        overrides.append(f"seed={args.seed}")
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text, overrides)
        if args.mode == "compare" and len(cfg.sweep_schemes) < 2:
            raise ConfigError("schemes", "compare mode needs at least two schemes")
    except (OSError, ValueError) as exc:
        print(f"dtdstc: error: {exc}", file=sys.stderr)
        return 1
    result = run_sweep(cfg)
    path = emit_csv(result, args.out / f"{args.mode}.csv")
    for p in result.points:
        print(f"{p.scheme:22s} {p.delay_profile:8s} {p.snr_db:6.2f} dB  ber={p.ber:.4e}  "
              f"({p.errors}/{p.bits})")
    if args.mode == "compare":
        for line in _compare_summary(result):
            print(line)
    print(f"wrote {path} in {result.duration_s:.1f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
