"""Named experiment configurations shared by the scripts and the acceptance suite."""
from __future__ import annotations

from dataclasses import replace

from .simulator import RunResult, ber_slope, run_sweep, snr_at_ber
from .system_model import RelayStrategy, Scheme, SystemConfig, Topology

TARGET_BER = 1e-3


def sas_single_antenna(delays=(0, 0), **kw) -> SystemConfig:
    """Two single-antenna relays, single-antenna endpoints (2 x 1 distributed Alamouti)."""
    base = dict(topology=Topology.SAS, n_r=2, N=1, delays=tuple(delays),
                snr_grid_db=tuple(float(x) for x in range(0, 30, 2)),
                trials_per_point=300_000, min_errors=1000, batch_size=20_000, seed=2024)
    base.update(kw)
    return SystemConfig(**base)


def baseline_configs(**kw) -> dict[str, SystemConfig]:
    """Synchronized SAS and MAS baselines, with and without the direct link."""
    grid = tuple(float(x) for x in range(0, 33, 3))
    common = dict(snr_grid_db=grid, trials_per_point=100_000, min_errors=500,
                  batch_size=20_000, seed=2024)
    common.update(kw)
    out = {}
    for dl in (False, True):
        tag = "dl" if dl else "nodl"
        out[f"sas_af_n1_{tag}"] = SystemConfig(topology=Topology.SAS, n_r=2, N=1,
                                               relay_strategy=RelayStrategy.AF,
                                               direct_link=dl, **common)
        out[f"sas_df_n1_{tag}"] = SystemConfig(topology=Topology.SAS, n_r=2, N=1,
                                               direct_link=dl, **common)
        out[f"sas_df_n2_{tag}"] = SystemConfig(topology=Topology.SAS, n_r=2, N=2,
                                               direct_link=dl, **common)
        out[f"mas_nr1_{tag}"] = SystemConfig(topology=Topology.MAS, n_r=1, N=2, delays=(0,),
                                             direct_link=dl, **common)
        out[f"mas_nr2_{tag}"] = SystemConfig(topology=Topology.MAS, n_r=2, N=2,
                                             direct_link=dl, **common)
    return out


def sas_randomization_config(delays=(0, 0), **kw) -> SystemConfig:
    """SAS comparison of plain and randomized distributed Alamouti."""
    kw.setdefault("schemes", (Scheme.DAlamouti, Scheme.RAlamouti))
    return sas_single_antenna(delays, **kw)


def mas_adaptation_config(delays=(0, 1), **kw) -> SystemConfig:
    """MAS with two 2-antenna relays: plain, randomized and adapted code matrices."""
    base = dict(topology=Topology.MAS, n_r=2, N=2, delays=tuple(delays),
                snr_grid_db=tuple(float(x) for x in range(0, 18, 2)),
                trials_per_point=60_000, min_errors=600, batch_size=60_000, chains=256,
                warmup_blocks=200, seed=2024,
                schemes=(Scheme.DAlamouti, Scheme.RAlamouti, Scheme.FullAlamoutiPerRelay))
    base.update(kw)
    return SystemConfig(**base)


def snr_gaps(result: RunResult, reference, target: float = TARGET_BER) -> dict[str, float]:
    """SNR advantage (dB) of every scheme over ``reference`` at ``target`` BER."""
    snr, ber = result.curve(reference)
    ref = snr_at_ber(snr, ber, target)
    gaps = {}
    for scheme in result.config.sweep_schemes:
        s, b = result.curve(scheme)
        gaps[Scheme(scheme).value] = ref - snr_at_ber(s, b, target)
    return gaps


def slope_change(cfg: SystemConfig, delayed=(0, 1), lo: float = 15.0, hi: float = 20.0):
    """(zero-delay slope, delayed slope) of log10 BER per SNR decade between lo and hi dB."""
    grid = dict(snr_grid_db=(lo, hi))
    sync = run_sweep(replace(cfg, delays=(0,) * cfg.n_r, **grid))
    late = run_sweep(replace(cfg, delays=tuple(delayed), **grid))
    s0 = ber_slope(*sync.curve(cfg.scheme), lo, hi)
    s1 = ber_slope(*late.curve(cfg.scheme), lo, hi)
    return s0, s1, sync, late


def binomial_overlap(a: RunResult, b: RunResult, scheme=Scheme.DAlamouti) -> list[tuple]:
    """Per common SNR: (snr, ber_a, ber_b, each inside the other's 95% interval)."""
    pa = {p.snr_db: p for p in a.points if p.scheme == Scheme(scheme).value}
    pb = {p.snr_db: p for p in b.points if p.scheme == Scheme(scheme).value}
    rows = []
    for snr in sorted(set(pa) & set(pb)):
        x, y = pa[snr], pb[snr]
        ok = x.ci_low <= y.ber <= x.ci_high and y.ci_low <= x.ber <= y.ci_high
        rows.append((snr, x.ber, y.ber, bool(ok)))
    return rows


__all__ = ["TARGET_BER", "binomial_overlap", "baseline_configs", "sas_randomization_config", "mas_adaptation_config",
           "sas_single_antenna", "slope_change", "snr_gaps"]
