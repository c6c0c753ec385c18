"""Config-driven experiment runners.

Each kind turns an :class:`~iqnet.config.ExperimentConfig` into an
:class:`ExperimentReport` holding per-seed rows and named verdicts, and
writes CSV and JSON artifacts under ``output_dir/<kind>/``.  Artifacts are
a pure function of the config; the wall-clock time lives only on the
report object.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from .config import ExperimentConfig, parse_initial
from .driving import DrivingStream
from .dynamics import (
    INFINITE,
    Box,
    DynamicsConfig,
    InitialCondition,
    Probes,
    Torus,
    coupled_run,
    run,
)
from .fluid import (
    FluidState,
    check_trajectory,
    integrate,
    scaling_check,
    step_halving_error,
    unimodal_profile,
)
from .interference import (
    closed_form_mean,
    k_shifted_mean_bound,
    second_moment_bound,
    truncate,
)
from .local_construction import block_length, dependency_schedule, evaluate
from .stationary import StatReport, ergodic_estimates, loynes_sample


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str
    seed: int | None = None
    replay: str | None = None


@dataclass
class ExperimentReport:
    kind: str
    inputs: dict
    per_seed: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_json(self) -> str:
        body = {
            "kind": self.kind,
            "inputs": self.inputs,
            "per_seed": self.per_seed,
            "verdicts": [asdict(v) for v in self.verdicts],
            "extras": self.extras,
            "passed": self.passed,
        }
        return json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def replay_command(cfg: ExperimentConfig, seed: int | None) -> str:
    src = cfg.source or "<config>"
    return f"iqnet run {src}" + (f" --seeds {seed}" if seed is not None else "")


def _verdict(cfg: ExperimentConfig, name: str, ok: bool, detail: str, seed=None) -> Verdict:
    ok = bool(ok)
    if ok:
        return Verdict(name, True, detail)
    return Verdict(name, False, detail, seed, replay_command(cfg, seed))


def dynamics_config(cfg: ExperimentConfig, **changes) -> DynamicsConfig:
    mode = Torus(cfg.n) if cfg.mode == "torus" else Box(cfg.n)
    kw = {"mode": mode, "K": cfg.K, "seq": cfg.seq, "lam": cfg.lam}
    kw.update(changes)
    return DynamicsConfig(**kw)


def _worst_seed(per_seed_means: list, seeds: list, target: float) -> int:
    dev = [abs(m - target) for m in per_seed_means]
    return seeds[int(np.argmax(dev))]


# ---------------------------------------------------------------- verdict helpers


def mean_verdicts(cfg, stat: StatReport, target: float, rel_tol: float) -> list[Verdict]:
    err = abs(stat.mean.value - target)
    ok = err <= rel_tol * abs(target) if target else stat.mean.value == 0
    detail = (f"pooled mean {stat.mean.value:.5f} +/- {stat.mean.half_width:.5f} vs "
              f"{target:.5f} (tolerance {rel_tol:.0%})")
    return [_verdict(cfg, "mean", ok, detail, _worst_seed(stat.per_seed_means, stat.seeds, target))]


def balance_verdicts(cfg, stat: StatReport, rate_tol: float, widths: float = 3.0) -> list[Verdict]:
    b = stat.balance
    lam = stat.lam
    worst = stat.seeds[0]
    rate = b.departure_rate_origin
    out = [_verdict(
        cfg, "departure_rate", abs(rate.value - lam) <= rate_tol * lam,
        f"accepted departures at the origin {rate.value:.5f}/unit time vs lambda {lam} "
        f"(tolerance {rate_tol:.0%})", worst,
    )]
    mt = b.mass_transport_residual
    out.append(_verdict(
        cfg, "mass_transport", mt.contains(0.0, widths),
        f"residual {mt.value:.5f} with half-width {mt.half_width:.5f} "
        f"(lhs {b.mass_transport_lhs.value:.5f}, rhs {b.mass_transport_rhs.value:.5f})", worst,
    ))
    dr = b.drift_residual
    out.append(_verdict(
        cfg, "drift", dr.contains(0.0, widths),
        f"up minus down jumps of x0*I0 per unit time {dr.value:.5f} +/- {dr.half_width:.5f}", worst,
    ))
    return out


def covariance_verdicts(cfg, stat: StatReport, decay_lag: int, widths: float = 3.0) -> list[Verdict]:
    cov = {c.lag: c for c in stat.covariance}
    seed = stat.seeds[0]
    out = [_verdict(cfg, "lag0_positive", cov[0].estimate > 0,
                    f"lag-0 covariance {cov[0].estimate:.4f}", seed)]
    low = [c.lag for c in stat.covariance if c.estimate < -widths * c.half_width]
    out.append(_verdict(cfg, "no_negative_lags", not low,
                        f"lags below -{widths:g} half-widths: {low}", seed))
    if decay_lag in cov:
        out.append(_verdict(
            cfg, "decay", cov[0].estimate > cov[decay_lag].estimate,
            f"lag 0 {cov[0].estimate:.4f} vs lag {decay_lag} {cov[decay_lag].estimate:.4f}", seed,
        ))
    return out


def second_moment_verdict(cfg, stat: StatReport, widths: float = 3.0) -> Verdict:
    bound = second_moment_bound(cfg.seq, cfg.lam).bound
    sm = stat.second_moment
    return _verdict(
        cfg, "second_moment", sm.value <= bound + widths * sm.half_width,
        f"E[x0^2] {sm.value:.4f} +/- {sm.half_width:.4f} vs bound {bound:.4f}",
        _worst_seed(stat.per_seed_means, stat.seeds, 0.0),
    )


def k_shift_verdicts(cfg, stat: StatReport, K: int, widths: float = 3.0) -> list[Verdict]:
    bound = k_shifted_mean_bound(cfg.seq, cfg.lam, K)
    m = stat.mean
    return [
        _verdict(cfg, "k_floor", stat.floor_violations == 0 and stat.min_count >= K,
                 f"{stat.floor_violations} drops below K={K}; smallest count {stat.min_count}",
                 stat.seeds[0]),
        _verdict(cfg, "k_mean", m.value <= bound + widths * m.half_width,
                 f"mean {m.value:.4f} +/- {m.half_width:.4f} vs bound {bound:.4f}",
                 _worst_seed(stat.per_seed_means, stat.seeds, 0.0)),
    ]


def overlap_verdict(cfg, low: StatReport, high: StatReport, widths: float = 3.0) -> Verdict:
    a, b = low.mean, high.mean
    gap = abs(a.value - b.value)
    return _verdict(
        cfg, "starts_agree", gap <= widths * (a.half_width + b.half_width),
        f"zero start {a.value:.5f} +/- {a.half_width:.5f}, high start "
        f"{b.value:.5f} +/- {b.half_width:.5f}", high.seeds[0],
    )


def _stat_rows(stat: StatReport) -> list[dict]:
    return [{"seed": s, "mean": m} for s, m in zip(stat.seeds, stat.per_seed_means)]


def _stat_extras(stat: StatReport) -> dict:
    body = json.loads(stat.to_json())
    body.pop("covariance", None)
    return body


def _ergodic(cfg: ExperimentConfig, lags=(0,), **changes) -> StatReport:
    initial = changes.pop("initial", None) or parse_initial(cfg.initial)
    return ergodic_estimates(dynamics_config(cfg, **changes), cfg.seeds, cfg.burn_in,
                             cfg.horizon, cfg.batches, lags=list(lags), initial=initial)


# ---------------------------------------------------------------- kinds


def _mean_vs_formula(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    o = cfg.options
    stat = _ergodic(cfg)
    target = o["target"] if o["target"] is not None else closed_form_mean(cfg.seq, cfg.lam)
    rep.verdicts += mean_verdicts(cfg, stat, target, o["rel_tol"])
    if o["check_balance"]:
        rep.verdicts += balance_verdicts(cfg, stat, o["rate_tol"])
    rep.per_seed = _stat_rows(stat)
    rep.extras["stat"] = _stat_extras(stat)


def _covariance_figure(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    o = cfg.options
    stat = _ergodic(cfg, lags=range(o["max_lag"] + 1))
    target = o["target"] if o["target"] is not None else closed_form_mean(cfg.seq, cfg.lam)
    rep.verdicts += mean_verdicts(cfg, stat, target, o["rel_tol"])
    rep.verdicts += covariance_verdicts(cfg, stat, o["decay_lag"])
    rep.per_seed = _stat_rows(stat)
    rep.extras["stat"] = _stat_extras(stat)
    rep.extras["files"] = {"covariance.csv": stat.covariance_csv()}


def _moment_bounds(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    o = cfg.options
    stat = _ergodic(cfg, K=0)
    rep.verdicts.append(second_moment_verdict(cfg, stat, o["width"]))
    K = o["shift"]
    shifted = _ergodic(cfg, K=K, initial=InitialCondition.constant(K))
    rep.verdicts += k_shift_verdicts(cfg, shifted, K, o["width"])
    rep.per_seed = [
        {"seed": s, "mean": m, "shifted_mean": k}
        for s, m, k in zip(stat.seeds, stat.per_seed_means, shifted.per_seed_means)
    ]
    rep.extras["stat"] = _stat_extras(stat)
    rep.extras["shifted"] = _stat_extras(shifted)


def _random_counts(sites, seed: int, mean: float, salt: int) -> dict:
    rng = np.random.default_rng([seed, salt])
    return dict(zip(sites, (int(v) for v in rng.poisson(mean, len(sites)))))


def coupling_seed(cfg: ExperimentConfig, seed: int) -> dict:
    """The three coupled audits for one seed."""
    o = cfg.options
    torus = DynamicsConfig(cfg.seq, cfg.lam, Torus(cfg.n), K=cfg.K)
    sites = torus.index_sites()
    t1 = math.ceil(1.5 * o["min_events"] / (len(sites) * (cfg.lam + 1.0)))
    driving = DrivingStream(seed, cfg.lam)
    row: dict = {"seed": seed, "t1": t1}

    low = _random_counts(sites, seed, 2.0, 1)
    extra = _random_counts(sites, seed, o["extra_mean"], 2)
    high = {s: low[s] + extra[s] for s in sites}
    res = coupled_run(
        [(torus, InitialCondition.explicit(low)), (torus, InitialCondition.explicit(high))],
        driving, 0.0, t1, orderings=[(0, 1)], strict=False,
    )
    row["ordered_events"] = res.events
    row["ordered_violations"] = len(res.report.violations)
    final = res.states[0].counts
    start = np.array([low[s] for s in res.states[0].sites])
    row["conservation_ok"] = bool(np.array_equal(final, start + res.arrivals[0] - res.departures[0]))

    r = o["suppress_radius"]
    lo, hi = o["suppress_window"]
    suppressed = DynamicsConfig(
        cfg.seq, cfg.lam, Torus(cfg.n), K=cfg.K,
        suppressed=[s for s in sites if max(abs(c) for c in s) <= r],
        suppression_window=(lo, hi),
    )
    res = coupled_run([(torus, InitialCondition.zero()), (suppressed, InitialCondition.zero())],
                      driving, 0.0, t1, orderings=[(1, 0)], strict=False)
    row["suppression_events"] = res.events
    row["suppression_violations"] = len(res.report.violations)

    box = DynamicsConfig(cfg.seq, cfg.lam, Box(cfg.n), K=cfg.K)
    res = coupled_run([(box, InitialCondition.zero()), (torus, InitialCondition.zero())],
                      driving, 0.0, t1, orderings=[(0, 1)], strict=False)
    row["box_events"] = res.events
    row["box_violations"] = len(res.report.violations)
    return row


def coupling_verdicts(cfg: ExperimentConfig, rows: list[dict]) -> list[Verdict]:
    need = cfg.options["min_events"]
    out = []
    for part, label in (("ordered", "ordered_initials"), ("suppression", "suppression"),
                        ("box", "box_below_torus")):
        bad = [r["seed"] for r in rows if r[f"{part}_violations"] or r[f"{part}_events"] < need]
        total = sum(r[f"{part}_violations"] for r in rows)
        fewest = min(r[f"{part}_events"] for r in rows)
        out.append(_verdict(cfg, label, not bad,
                            f"{total} violations over {len(rows)} seeds, fewest events {fewest}",
                            bad[0] if bad else None))
    bad = [r["seed"] for r in rows if not r["conservation_ok"]]
    out.append(_verdict(cfg, "conservation", not bad, f"ledger mismatches in seeds {bad}",
                        bad[0] if bad else None))
    return out


def _coupling_suite(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    rep.per_seed = [coupling_seed(cfg, s) for s in cfg.seeds]
    rep.verdicts += coupling_verdicts(cfg, rep.per_seed)


def loynes_seed(cfg: ExperimentConfig, seed: int) -> dict:
    o = cfg.options
    dyn = dynamics_config(cfg)
    sample = loynes_sample(dyn, [(0,) * cfg.dimension], o["T0"], o["max_doublings"], seed,
                           o["patience"])
    boxes = [(DynamicsConfig(cfg.seq, cfg.lam, Box(r), K=cfg.K), InitialCondition.zero())
             for r in o["box_radii"]]
    res = coupled_run(boxes, DrivingStream(seed, cfg.lam), -o["box_depth"], 0.0,
                      orderings=[(k, k + 1) for k in range(len(boxes) - 1)], strict=False)
    return {
        "seed": seed,
        "depths": sample.depths,
        "values": sample.values[:, 0].tolist(),
        "monotone": sample.monotone(),
        "converged": sample.converged[0],
        "converged_depth": sample.converged_depth[0],
        "box_events": res.events,
        "box_violations": len(res.report.violations),
    }


def loynes_verdicts(cfg: ExperimentConfig, rows: list[dict]) -> list[Verdict]:
    o = cfg.options
    bad = [r["seed"] for r in rows if not r["monotone"]]
    out = [_verdict(cfg, "depth_monotone", not bad, f"non-monotone seeds {bad}",
                    bad[0] if bad else None)]
    bad = [r["seed"] for r in rows if r["box_violations"]]
    out.append(_verdict(cfg, "box_monotone", not bad,
                        f"radius-ordering violations in seeds {bad} (radii {o['box_radii']})",
                        bad[0] if bad else None))
    conv = [r for r in rows if r["converged"]]
    frac = len(conv) / len(rows)
    missing = [r["seed"] for r in rows if not r["converged"]]
    deepest = max((r["converged_depth"] for r in conv), default=None)
    out.append(_verdict(
        cfg, "converged_fraction", frac >= o["min_fraction"],
        f"{len(conv)}/{len(rows)} seeds converged by depth "
        f"{o['T0'] * 2 ** o['max_doublings']:g} (deepest stable start {deepest})",
        missing[0] if missing else None,
    ))
    return out


def _loynes(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    rep.per_seed = [loynes_seed(cfg, s) for s in cfg.seeds]
    rep.verdicts += loynes_verdicts(cfg, rep.per_seed)


def local_vs_box_seed(cfg: ExperimentConfig, seed: int) -> dict:
    o = cfg.options
    d = cfg.dimension
    L = cfg.seq.support_radius
    params = block_length(cfg.lam, L, d, o["safety"])
    driving = DrivingStream(seed, cfg.lam)
    k = (o["target_site"],) + (0,) * (d - 1)
    initial = parse_initial(cfg.initial)
    sched = dependency_schedule(driving, k, o["T"], params)
    local = evaluate(driving, cfg.seq, k, o["T"], initial, params, K=cfg.K)
    reach = max((max(abs(c) for c in s) for s in sched.sets[0]), default=0) if sched.sets else 0
    radius = max(reach, max(abs(c) for c in k)) + L + o["margin"]
    big = run(DynamicsConfig(cfg.seq, cfg.lam, Box(radius), K=cfg.K), initial, driving, 0.0, o["T"])
    return {
        "seed": seed,
        "local": local,
        "box": int(big.state[k]),
        "box_radius": radius,
        "blocks": len(sched.windows),
        "largest_set": max(sched.sizes(), default=1),
        "nested": sched.is_nested(),
    }


def _local_vs_box(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    rows = [local_vs_box_seed(cfg, s) for s in cfg.seeds]
    rep.per_seed = rows
    bad = [r["seed"] for r in rows if r["local"] != r["box"]]
    rep.verdicts.append(_verdict(cfg, "exact_match", not bad,
                                 f"{len(rows) - len(bad)}/{len(rows)} seeds agree exactly",
                                 bad[0] if bad else None))
    bad = [r["seed"] for r in rows if not r["nested"]]
    rep.verdicts.append(_verdict(cfg, "nested", not bad, f"non-nested schedules in {bad}",
                                 bad[0] if bad else None))


def frozen_wall_seed(cfg: ExperimentConfig, seed: int) -> dict:
    o = cfg.options
    w = o["wall"]
    L = cfg.seq.support_radius
    mag = INFINITE if o["magnitude"] == "inf" else o["magnitude"]
    outer = w + L
    sites = [(i,) for i in range(-outer, outer + 1)]
    dyn = DynamicsConfig(
        cfg.seq, cfg.lam, Box(outer), K=cfg.K, frozen={(-w,): mag, (w,): mag},
        suppressed=[s for s in sites if abs(s[0]) > w],
    )
    times = sorted(set(o["checkpoints"]) | {o["count_time"]})
    probes = Probes(times, [(0,), (w - 1,), (1 - w,)])
    res = run(dyn, parse_initial(cfg.initial), DrivingStream(seed, cfg.lam), 0.0, times[-1], probes)
    at = {t: res.probes.counts[k] for k, t in enumerate(res.probes.times)}
    idx = dyn.index_sites()
    adj = [idx.index((w - 1,)), idx.index((1 - w,))]
    return {
        "seed": seed,
        "x0": [int(at[t][0]) for t in o["checkpoints"]],
        "adjacent_count": int(at[o["count_time"]][1]),
        "adjacent_departures": int(res.departures[adj].sum()),
    }


def frozen_wall_verdicts(cfg: ExperimentConfig, rows: list[dict]) -> list[Verdict]:
    o = cfg.options
    out = []
    if o["magnitude"] == "inf":
        mean = cfg.lam * o["count_time"]
        sd = math.sqrt(mean)
        first = rows[0]
        z = [(r["adjacent_count"] - mean) / sd for r in rows]
        out.append(_verdict(
            cfg, "adjacent_poisson", abs(z[0]) <= o["sigmas"],
            f"seed {first['seed']}: count next to the wall at t={o['count_time']:g} is "
            f"{first['adjacent_count']}, expected {mean:g} +/- {o['sigmas']:g}*{sd:.2f}",
            first["seed"],
        ))
        # the sum over seeds is Poisson(seeds * lam * T) as well
        pooled = sum(r["adjacent_count"] for r in rows)
        zp = (pooled - mean * len(rows)) / math.sqrt(mean * len(rows))
        worst = int(np.argmax(np.abs(z)))
        out.append(_verdict(
            cfg, "adjacent_poisson_pooled", abs(zp) <= o["sigmas"],
            f"sum over {len(rows)} seeds z={zp:.2f}; largest single-seed |z| "
            f"{abs(z[worst]):.2f} (seed {rows[worst]['seed']})", rows[worst]["seed"],
        ))
        bad = [r["seed"] for r in rows if r["adjacent_departures"]]
        out.append(_verdict(cfg, "adjacent_no_departures", not bad,
                            f"seeds with departures next to an infinite wall: {bad}",
                            bad[0] if bad else None))
    medians = [float(np.median([r["x0"][k] for r in rows])) for k in range(len(o["checkpoints"]))]
    rising = all(b > a for a, b in zip(medians, medians[1:]))
    out.append(_verdict(cfg, "origin_growth", rising,
                        f"median x0 at t={o['checkpoints']}: {medians}", rows[0]["seed"]))
    return out


def _frozen_wall(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    rep.per_seed = [frozen_wall_seed(cfg, s) for s in cfg.seeds]
    rep.verdicts += frozen_wall_verdicts(cfg, rep.per_seed)


def _bounded_start(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    o = cfg.options
    low = _ergodic(cfg, initial=InitialCondition.zero())
    high = _ergodic(cfg, initial=InitialCondition.constant(o["high"]))
    rep.verdicts.append(overlap_verdict(cfg, low, high, o["width"]))
    rep.per_seed = [
        {"seed": s, "mean_zero_start": a, "mean_high_start": b}
        for s, a, b in zip(low.seeds, low.per_seed_means, high.per_seed_means)
    ]
    rep.extras["zero_start"] = _stat_extras(low)
    rep.extras["high_start"] = _stat_extras(high)


def growth_seed(cfg: ExperimentConfig, seed: int) -> dict:
    o = cfg.options
    dyn = dynamics_config(cfg)
    sites = dyn.index_sites()
    times = np.arange(o["sample_interval"], cfg.horizon + 1e-9, o["sample_interval"])
    res = run(dyn, parse_initial(cfg.initial), DrivingStream(seed, cfg.lam), 0.0, cfg.horizon,
              Probes(times.tolist(), sites))
    totals = res.probes.counts.sum(axis=1)
    keep = res.probes.times >= o["min_t"]
    fit = stats.linregress(res.probes.times[keep], totals[keep])
    return {
        "seed": seed,
        "slope": float(fit.slope),
        "stderr": float(fit.stderr),
        "t_stat": float(fit.slope / fit.stderr) if fit.stderr > 0 else math.inf,
        "final_total": int(totals[-1]),
    }


def _supercritical_growth(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    rows = [growth_seed(cfg, s) for s in cfg.seeds]
    rep.per_seed = rows
    bad = [r["seed"] for r in rows if not (r["slope"] > 0 and r["t_stat"] > 10)]
    worst = min(rows, key=lambda r: r["t_stat"])
    rep.verdicts.append(_verdict(
        cfg, "linear_growth", not bad,
        f"smallest t-statistic {worst['t_stat']:.1f} (slope {worst['slope']:.3f} per unit time)",
        bad[0] if bad else None,
    ))


def fluid_suite(cfg: ExperimentConfig) -> tuple[list, dict]:
    """Verdict tuples ``(name, ok, detail)`` and CSV artifacts."""
    o = cfg.options
    seq, N, h = cfg.seq, o["N"], o["step"]
    init = unimodal_profile(N, o["peak"], o["decay"])
    horizon, every = o["fluid_horizon"], o["sample_interval"]
    sup = integrate(init, cfg.lam, seq, h, horizon, every)
    verdict = check_trajectory(sup, seq, cfg.lam)
    out = [
        ("unimodality", verdict.unimodality_ok, "weak unimodality at every sample (tol 1e-6)"),
        ("J_monotone", verdict.J_monotone, f"J from {sup.J[0]:.4g} to {sup.J[-1]:.4g}"),
        ("slope_bound", verdict.slope_bound_ok,
         f"smallest slope minus bound {verdict.worst_slope_margin:.4g} (tol 1e-4)"),
    ]
    sub = integrate(init, o["sub_lambda"], seq, h, horizon, every)
    ratio = sub.states[-1].sum() / init.total
    out.append(("subcritical_drain", ratio < o["drain_fraction"],
                f"mass ratio {ratio:.3g} at t={horizon:g} with lambda={o['sub_lambda']}"))
    gaps = [step_halving_error(init, lam, seq, h, horizon, every) for lam in (cfg.lam, o["sub_lambda"])]
    out.append(("step_halving", max(gaps) <= o["halving_tol"],
                f"sup gaps {gaps[0]:.3g} (supercritical), {gaps[1]:.3g} (subcritical) at step {h:g}"))
    spike = np.zeros(2 * N + 1)
    spike[N] = 1.0
    revived = integrate(FluidState(N, spike), cfg.lam, seq, h, 1.0, 1.0).states[-1]
    out.append(("revival", bool(np.all(revived > 0)),
                f"smallest coordinate after t=1 from a single spike: {revived.min():.3g}"))
    pts = scaling_check(FluidState(N, init.y), cfg.lam, seq, o["scaling_horizon"],
                        o["scales"], cfg.seeds, h)
    by_scale = {z: float(np.mean([p.sup_error for p in pts if p.scale == z])) for z in o["scales"]}
    zs = sorted(by_scale)
    out.append(("scaling", by_scale[zs[-1]] < by_scale[zs[0]],
                "mean sup error by scale " + ", ".join(f"{z}: {by_scale[z]:.4f}" for z in zs)))
    files = {"supercritical.csv": sup.csv_text(), "subcritical.csv": sub.csv_text()}
    files["verdict.json"] = verdict.to_json() + "\n"
    return out, files


def _fluid_transience(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    checks, files = fluid_suite(cfg)
    for name, ok, detail in checks:
        rep.verdicts.append(_verdict(cfg, name, ok, detail, cfg.seeds[0]))
    rep.extras["files"] = files


def truncation_paths(cfg: ExperimentConfig) -> list[dict]:
    o = cfg.options
    box = Box(o["path_box"])
    systems = [(DynamicsConfig(truncate(cfg.seq, r), cfg.lam, box), InitialCondition.zero())
               for r in o["radii"]]
    origin = (0,) * cfg.dimension
    rows = []
    for seed in o["path_seeds"]:
        res = coupled_run(systems, DrivingStream(seed, cfg.lam), 0.0, o["path_horizon"],
                          trace_site=origin, strict=False)
        same = all(np.array_equal(res.traces[0], t) for t in res.traces[1:])
        rows.append({"seed": seed, "identical": bool(same), "origin_events": int(res.traces.shape[1])})
    return rows


def _infinite_support(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    o = cfg.options
    rows = truncation_paths(cfg)
    same = sum(r["identical"] for r in rows)
    differ = [r["seed"] for r in rows if not r["identical"]]
    rep.verdicts.append(_verdict(
        cfg, "paths_stabilize", same / len(rows) >= o["min_fraction"],
        f"{same}/{len(rows)} seeds give identical origin paths for radii {o['radii']}; "
        f"differing seeds {differ}", differ[0] if differ else None,
    ))
    big = truncate(cfg.seq, max(o["radii"]))
    stat = _ergodic(cfg, seq=big)
    rep.verdicts += mean_verdicts(cfg, stat, closed_form_mean(big, cfg.lam), o["rel_tol"])
    rep.per_seed = _stat_rows(stat)
    rep.extras["paths"] = rows
    rep.extras["stat"] = _stat_extras(stat)


RUNNERS: dict[str, Callable] = {
    "mean-vs-formula": _mean_vs_formula,
    "covariance-figure": _covariance_figure,
    "moment-bounds": _moment_bounds,
    "coupling-suite": _coupling_suite,
    "loynes": _loynes,
    "local-vs-box": _local_vs_box,
    "frozen-wall": _frozen_wall,
    "bounded-start-convergence": _bounded_start,
    "supercritical-growth": _supercritical_growth,
    "fluid-transience": _fluid_transience,
    "infinite-support": _infinite_support,
}


def _per_seed_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(_cell(r[c]) for c in cols))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return '"' + " ".join(_cell(x) for x in v) + '"'
    return "" if v is None else str(v)


def write_artifacts(cfg: ExperimentConfig, rep: ExperimentReport) -> Path:
    out = Path(cfg.output_dir) / cfg.kind
    out.mkdir(parents=True, exist_ok=True)
    files = dict(rep.extras.get("files", {}))
    body = ExperimentReport(rep.kind, rep.inputs, rep.per_seed, rep.verdicts,
                            {k: v for k, v in rep.extras.items() if k != "files"})
    files["report.json"] = body.to_json()
    if rep.per_seed:
        files["per_seed.csv"] = _per_seed_csv(rep.per_seed)
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
    return out


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentReport:
    start = time.perf_counter()
    rep = ExperimentReport(cfg.kind, cfg.echo())
    RUNNERS[cfg.kind](cfg, rep)
    rep.wall_clock = time.perf_counter() - start
    if write:
        write_artifacts(cfg, rep)
    return rep


__all__ = ["ExperimentReport", "RUNNERS", "Verdict", "dynamics_config", "run_experiment",
           "write_artifacts"]
