"""Experiment configuration files.

An INI file with one ``[experiment]`` section of shared keys and at most one
extra section named after the experiment kind.  Parsing is strict: unknown
sections or keys raise :class:`ParseError` with the offending line; values
that break a precondition of the requested experiment raise
:class:`SemanticError`.

Shared keys (defaults in brackets)::

    kind            experiment kind, required
    lambda          arrival rate, required
    interference    ones:W | geometric:R:RADIUS | weights:OFF=W,OFF=W,...  [ones:3]
    dimension       lattice dimension [1]
    mode            torus | box [torus]
    n               half-width of the index set [50]
    K               departure shift level [0]
    seeds           list such as 1,2,7 or a range 0-9 [0]
    burn_in         time discarded before averaging [20000]
    horizon         averaging or run length [200000]
    batches         batch-means batch count per seed [30]
    initial         zero | constant:V | sparse:B1/A1,B2/A2,... [zero]
    output_dir      where CSV and JSON artifacts go [iqnet-out]
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import InterferenceError, ParseError, SemanticError
from .interference import (
    InterferenceSequence,
    critical_rate,
    geometric,
    ones,
    second_moment_bound,
    validate,
)

KINDS = (
    "mean-vs-formula",
    "covariance-figure",
    "moment-bounds",
    "coupling-suite",
    "loynes",
    "local-vs-box",
    "frozen-wall",
    "bounded-start-convergence",
    "supercritical-growth",
    "fluid-transience",
    "infinite-support",
)


def int_list(text: str) -> list[int]:
    out: list[int] = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        m = re.fullmatch(r"(-?\d+)-(-?\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ValueError(f"empty range {part}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def float_list(text: str) -> list[float]:
    return [float(p) for p in text.replace(" ", "").split(",") if p]


def _magnitude(text: str):
    text = text.strip().lower()
    return "inf" if text in ("inf", "infinite") else int(text)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


SHARED = {
    "kind": (str, None),
    "lambda": (float, None),
    "interference": (str, "ones:3"),
    "dimension": (int, 1),
    "mode": (str, "torus"),
    "n": (int, 50),
    "K": (int, 0),
    "seeds": (int_list, "0"),
    "burn_in": (float, 20000.0),
    "horizon": (float, 200000.0),
    "batches": (int, 30),
    "initial": (str, "zero"),
    "output_dir": (str, "iqnet-out"),
}

# per-kind keys and their defaults
OPTIONS: dict[str, dict] = {
    "mean-vs-formula": {"rel_tol": (float, 0.03), "target": (float, None),
                        "rate_tol": (float, 0.02), "check_balance": (_bool, True)},
    "covariance-figure": {"max_lag": (int, 25), "rel_tol": (float, 0.10),
                          "target": (float, None), "decay_lag": (int, 10)},
    "moment-bounds": {"shift": (int, 2), "width": (float, 3.0)},
    "coupling-suite": {"min_events": (int, 10_000), "suppress_radius": (int, 10),
                       "suppress_window": (float_list, "20,80"), "extra_mean": (float, 3.0)},
    "loynes": {"T0": (float, 1.0), "max_doublings": (int, 11), "patience": (int, 2),
               "box_radii": (int_list, "10,20,40"), "box_depth": (float, 256.0),
               "min_fraction": (float, 0.95)},
    "local-vs-box": {"target_site": (int, 0), "T": (float, 5.0), "safety": (float, 0.9),
                     "margin": (int, 5)},
    "frozen-wall": {"wall": (int, 5), "magnitude": (_magnitude, "inf"),
                    "count_time": (float, 1e4), "checkpoints": (float_list, "2000,10000,50000"),
                    "sigmas": (float, 3.0)},
    "bounded-start-convergence": {"high": (int, 5), "width": (float, 3.0)},
    "supercritical-growth": {"sample_interval": (float, 10.0), "min_t": (float, 10.0)},
    "fluid-transience": {"N": (int, 20), "step": (float, 1e-4), "fluid_horizon": (float, 200.0),
                         "sample_interval": (float, 1.0), "sub_lambda": (float, 0.2),
                         "drain_fraction": (float, 1e-2), "halving_tol": (float, 1e-5),
                         "scales": (int_list, "100,400"), "scaling_horizon": (float, 2.0),
                         "peak": (float, 1.0), "decay": (float, 0.1)},
    "infinite-support": {"radii": (int_list, "8,16"), "path_horizon": (float, 10.0),
                         "path_seeds": (int_list, "0-99"), "path_box": (int, 40),
                         "min_fraction": (float, 0.95), "rel_tol": (float, 0.05)},
}


@dataclass
class ExperimentConfig:
    kind: str
    lam: float
    seq: InterferenceSequence
    interference: str
    dimension: int = 1
    mode: str = "torus"
    n: int = 50
    K: int = 0
    seeds: list = field(default_factory=lambda: [0])
    burn_in: float = 20000.0
    horizon: float = 200000.0
    batches: int = 30
    initial: str = "zero"
    output_dir: str = "iqnet-out"
    options: dict = field(default_factory=dict)
    source: str | None = None

    def echo(self) -> dict:
        """Plain inputs for reports."""
        return {
            "kind": self.kind, "lambda": self.lam, "interference": self.interference,
            "dimension": self.dimension, "mode": self.mode, "n": self.n, "K": self.K,
            "seeds": list(self.seeds), "burn_in": self.burn_in, "horizon": self.horizon,
            "batches": self.batches, "initial": self.initial,
            "options": {k: v for k, v in sorted(self.options.items())},
        }


def parse_interference(text: str, d: int = 1) -> InterferenceSequence:
    name, _, rest = text.strip().partition(":")
    try:
        if name == "ones":
            return ones(int(rest), d)
        if name == "geometric":
            ratio, radius = rest.split(":")
            return geometric(Fraction(ratio), int(radius), d)
        if name == "weights":
            raw = {}
            for item in rest.split(","):
                off, w = item.split("=")
                key = tuple(int(c) for c in off.split("/")) if "/" in off.strip("-") else int(off)
                raw[key] = Fraction(w) if re.fullmatch(r"\s*-?\d+(/\d+)?\s*", w) else float(w)
            return validate(raw, d)
    except InterferenceError:
        raise
    except ValueError as exc:
        raise ValueError(f"bad interference spec {text!r}: {exc}") from exc
    raise ValueError(f"unknown interference spec {text!r}")


def _line_of(lines: list[str], section: str, key: str | None) -> int | None:
    current = None
    for no, line in enumerate(lines, start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if key is None and current == section:
                return no
        elif key is not None and current == section:
            m = re.match(r"([^=:\s]+)\s*[=:]", s)
            if m and m.group(1).lower() == key.lower():
                return no
    return None


def parse_text(text: str, source: str | None = None) -> ExperimentConfig:
    lines = text.splitlines()
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source or "<config>")
    except configparser.Error as exc:
        raise ParseError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from exc
    if "experiment" not in cp:
        raise ParseError("missing [experiment] section", line=None)
    sect = cp["experiment"]
    values = {}
    for key, raw in sect.items():
        if key not in SHARED:
            raise ParseError(f"unknown key {key!r} in [experiment]",
                             line=_line_of(lines, "experiment", key), key=key)
        parser = SHARED[key][0]
        try:
            values[key] = parser(raw)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}",
                             line=_line_of(lines, "experiment", key), key=key) from exc
    for key in ("kind", "lambda"):
        if key not in values:
            raise ParseError(f"missing required key {key!r}", line=None, key=key)
    kind = values["kind"]
    if kind not in KINDS:
        raise ParseError(f"unknown experiment kind {kind!r}",
                         line=_line_of(lines, "experiment", "kind"), key="kind")
    for name in cp.sections():
        if name not in ("experiment", kind):
            raise ParseError(f"unexpected section [{name}] for kind {kind}",
                             line=_line_of(lines, name, None), key=name)
    schema = OPTIONS[kind]
    options = {}
    given = cp[kind] if kind in cp else {}
    for key, raw in given.items():
        if key not in schema:
            raise ParseError(f"unknown key {key!r} in [{kind}]",
                             line=_line_of(lines, kind, key), key=key)
        try:
            options[key] = schema[key][0](raw)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}",
                             line=_line_of(lines, kind, key), key=key) from exc
    for key, (parser, default) in schema.items():
        if key not in options:
            options[key] = parser(default) if isinstance(default, str) else default
    for key, (parser, default) in SHARED.items():
        if key not in values and default is not None:
            values[key] = parser(default) if isinstance(default, str) and parser is not str else default
    d = values["dimension"]
    try:
        seq = parse_interference(values["interference"], d)
    except (ValueError, InterferenceError) as exc:
        raise SemanticError(str(exc)) from exc
    cfg = ExperimentConfig(
        kind=kind, lam=values["lambda"], seq=seq, interference=values["interference"],
        dimension=d, mode=values["mode"], n=values["n"], K=values["K"], seeds=values["seeds"],
        burn_in=values["burn_in"], horizon=values["horizon"], batches=values["batches"],
        initial=values["initial"], output_dir=values["output_dir"], options=options,
        source=source,
    )
    check_semantics(cfg)
    return cfg


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}", line=None) from exc
    return parse_text(text, str(path))


SUBCRITICAL_KINDS = {
    "mean-vs-formula", "covariance-figure", "moment-bounds", "bounded-start-convergence",
    "loynes", "infinite-support",
}


def check_semantics(cfg: ExperimentConfig) -> None:
    """Raise :class:`SemanticError` when a precondition of the kind fails."""
    if not cfg.seeds:
        raise SemanticError("seeds must be non-empty")
    if any(s < 0 for s in cfg.seeds):
        raise SemanticError("seeds must be non-negative")
    if cfg.lam < 0:
        raise SemanticError("lambda must be non-negative")
    if cfg.mode not in ("torus", "box"):
        raise SemanticError(f"mode must be torus or box, not {cfg.mode!r}")
    if cfg.n < 1:
        raise SemanticError("n must be positive")
    if cfg.K < 0:
        raise SemanticError("K must be non-negative")
    if cfg.mode == "torus" and 2 * cfg.n + 1 <= 2 * cfg.seq.support_radius:
        raise SemanticError("torus mode needs 2n+1 > 2L (torus too small for the support)")
    crit = critical_rate(cfg.seq)
    if cfg.kind in SUBCRITICAL_KINDS and cfg.lam >= crit:
        raise SemanticError(
            f"{cfg.kind} needs a subcritical rate: lambda={cfg.lam} >= 1/sum(a)={crit:.6g}"
        )
    if cfg.kind == "supercritical-growth" and cfg.lam <= crit:
        raise SemanticError(f"supercritical-growth needs lambda > 1/sum(a)={crit:.6g}")
    if cfg.kind in ("mean-vs-formula", "covariance-figure", "moment-bounds",
                    "bounded-start-convergence", "infinite-support"):
        if cfg.mode != "torus":
            raise SemanticError(f"{cfg.kind} uses ergodic estimates, which need torus mode")
        if cfg.batches < 20:
            raise SemanticError("batches must be at least 20")
        if cfg.horizon <= 0 or cfg.burn_in < 0:
            raise SemanticError("need horizon > 0 and burn_in >= 0")
    if cfg.kind == "moment-bounds":
        try:
            second_moment_bound(cfg.seq, cfg.lam)
        except InterferenceError as exc:
            raise SemanticError(f"second-moment bound does not apply: {exc}") from exc
    if cfg.kind in ("fluid-transience",) and cfg.dimension != 1:
        raise SemanticError("the fluid system is one-dimensional")
    if cfg.kind == "frozen-wall":
        if cfg.options["wall"] < cfg.seq.support_radius:
            raise SemanticError("wall position must be at least the support radius")
    if cfg.kind == "infinite-support" and max(cfg.options["radii"]) > cfg.seq.support_radius:
        raise SemanticError("truncation radii exceed the interference support radius")
    try:
        parse_initial(cfg.initial)
    except ValueError as exc:
        raise SemanticError(str(exc)) from exc


def parse_initial(text: str):
    from .dynamics import InitialCondition

    name, _, rest = text.strip().partition(":")
    if name == "zero":
        return InitialCondition.zero()
    if name == "constant":
        return InitialCondition.constant(int(rest))
    if name == "sparse":
        pairs = [p.split("/") for p in rest.split(",") if p]
        return InitialCondition.sparse([int(b) for b, _ in pairs], [int(a) for _, a in pairs])
    raise ValueError(f"unknown initial condition {text!r}")


__all__ = ["ExperimentConfig", "KINDS", "OPTIONS", "SHARED", "check_semantics", "parse_config",
           "parse_initial", "parse_interference", "parse_text"]
