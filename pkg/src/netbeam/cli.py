"""Experiment runner: parse a config, sweep schemes over transmit powers,
write per-scheme CSV curves, a plain-text summary of dB gaps and diversity
slopes, and a companion figure.

Config files are flat ``key = value`` text under ``[section]`` headers::

    [experiment]
    schemes = beamform_no_dl, best_relay, larsson_aggregate
    topology = unit_variance
    relay_count = 2
    start_db = 8
    stop_db = 24
    step_db = 2
    trials_per_point = 100000
    seed = 1234
    output = out

    [power_overrides]   ; optional, multipliers of the swept power
    p2 = 0.5

Exit status: 0 on success, 2 on a config error (reported with line/column),
1 on a runtime failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .beamsolver import PowerBudget
from .channel import RngSeed, Topology, TopologyKind
from .dlsolver import IterationControl
from .montecarlo import (
    BlerCurve,
    EstimationError,
    Scheme,
    diversity_slope,
    estimate_bler,
)
from .report import format_real, render_bler_figure, write_curve_csv

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "gap_at_bler",
           "run", "main"]

GAP_TARGETS = (1e-2, 1e-3)


class ConfigError(ValueError):
    """Unreadable or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    schemes: tuple
    topology: Topology
    start_db: float
    stop_db: float
    step_db: float
    trials_per_point: int
    seed: int
    output: Path
    power_overrides: dict = field(default_factory=dict)  # node index -> multiplier
    ctrl: IterationControl = IterationControl()
    b1_bits: int = 16
    workers: int = 1
    slope_window_db: tuple | None = None  # defaults to the top 10 dB of the sweep

    def power_sweep_db(self) -> list:
        n = int(math.floor((self.stop_db - self.start_db) / self.step_db + 1e-9)) + 1
        return [self.start_db + k * self.step_db for k in range(n)]

    def budget_for(self, p_db: float) -> PowerBudget:
        base = 10.0 ** (p_db / 10.0)
        p0 = base * self.power_overrides.get(0, 1.0)
        relays = [base * self.power_overrides.get(i, 1.0)
                  for i in range(1, self.topology.relay_count + 1)]
        return PowerBudget(p0=p0, p=np.array(relays))


class _RawConfig:
    """Minimal key=value parser that remembers where each entry came from."""

    def __init__(self, text: str, source: str = "<config>"):
        self.source = source
        self.entries: dict = {}  # (section, key) -> (value, line, col)
        section = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split(";")[0].split("#")[0].rstrip()
            if not line.strip():
                continue
            stripped = line.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                section = stripped[1:-1].strip().lower()
                if not section:
                    raise ConfigError(f"{source}: line {lineno}, column "
                                      f"{raw.index('[') + 1}: empty section name")
                continue
            if "=" not in line:
                raise ConfigError(f"{source}: line {lineno}, column 1: "
                                  f"expected 'key = value', got {stripped!r}")
            if section is None:
                raise ConfigError(f"{source}: line {lineno}, column 1: "
                                  "entry before any [section] header")
            key, _, value = line.partition("=")
            col = len(key) + 2
            key = key.strip().lower()
            if not key:
                raise ConfigError(f"{source}: line {lineno}, column 1: empty key")
            self.entries[(section, key)] = (value.strip(), lineno, col)

    def get(self, section: str, key: str, default=None):
        if (section, key) in self.entries:
            return self.entries[(section, key)][0]
        return default

    def where(self, section: str, key: str) -> str:
        _, lineno, col = self.entries[(section, key)]
        return f"{self.source}: line {lineno}, column {col}"

    def typed(self, section: str, key: str, cast, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.where(section, key)}: bad value for "
                              f"{key!r}: {exc}") from exc

    def sections(self):
        return {s for s, _ in self.entries}

    def keys_in(self, section: str):
        return [k for s, k in self.entries if s == section]


def _require(raw: _RawConfig, section: str, key: str, cast):
    value = raw.typed(section, key, cast)
    if value is None:
        raise ConfigError(f"{raw.source}: missing required key "
                          f"'{key}' in section [{section}]")
    return value


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw = _RawConfig(text, source=str(path))

    def scheme_list(value: str):
        names = [v.strip() for v in value.split(",") if v.strip()]
        if not names:
            raise ValueError("empty scheme list")
        return tuple(Scheme(name) for name in names)

    try:
        schemes = _require(raw, "experiment", "schemes", scheme_list)
        kind = TopologyKind(_require(raw, "experiment", "topology", str))
        relay_count = _require(raw, "experiment", "relay_count", int)
        topology = Topology(
            kind=kind,
            relay_count=relay_count,
            tx_rx_distance=raw.typed("topology_params", "tx_rx_distance", float),
            disk_radius=raw.typed("topology_params", "disk_radius", float),
            path_loss_exponent=raw.typed("topology_params", "path_loss_exponent",
                                         float, 2.0),
        )
        start_db = _require(raw, "experiment", "start_db", float)
        stop_db = _require(raw, "experiment", "stop_db", float)
        step_db = _require(raw, "experiment", "step_db", float)
        if step_db <= 0:
            raise ConfigError(f"{raw.where('experiment', 'step_db')}: "
                              "step_db must be > 0")
        if stop_db < start_db:
            raise ConfigError(f"{raw.where('experiment', 'stop_db')}: "
                              "stop_db must be >= start_db")
        trials = _require(raw, "experiment", "trials_per_point", int)
        seed = _require(raw, "experiment", "seed", int)
        output = Path(_require(raw, "experiment", "output", str))

        overrides = {}
        for key in raw.keys_in("power_overrides"):
            if not (key.startswith("p") and key[1:].isdigit()):
                raise ConfigError(f"{raw.where('power_overrides', key)}: "
                                  f"override keys look like p0, p1, ...; got {key!r}")
            node = int(key[1:])
            if node > relay_count:
                raise ConfigError(f"{raw.where('power_overrides', key)}: "
                                  f"node index {node} exceeds relay_count {relay_count}")
            overrides[node] = raw.typed("power_overrides", key, float)

        ctrl = IterationControl(
            max_iter=raw.typed("solver", "iter", int, 20),
            tol=raw.typed("solver", "thre", float, None),
        )
        b1 = raw.typed("feedback", "b1", int, 16)
        workers = raw.typed("experiment", "workers", int, 1)
        window = None
        w_lo = raw.typed("experiment", "slope_window_low_db", float)
        w_hi = raw.typed("experiment", "slope_window_high_db", float)
        if (w_lo is None) != (w_hi is None):
            raise ConfigError(f"{raw.source}: slope window needs both "
                              "slope_window_low_db and slope_window_high_db")
        if w_lo is not None:
            window = (w_lo, w_hi)
        return ExperimentConfig(schemes=schemes, topology=topology,
                                start_db=start_db, stop_db=stop_db, step_db=step_db,
                                trials_per_point=trials, seed=seed, output=output,
                                power_overrides=overrides, ctrl=ctrl, b1_bits=b1,
                                workers=workers, slope_window_db=window)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{raw.source}: {exc}") from exc


def _crossing_db(curve: BlerCurve, target: float):
    """Power (dB) where the log-linear interpolation crosses ``target``."""
    pts = [(p, b) for p, b in zip(curve.power_db, curve.bler) if b > 0]
    for (p1, b1), (p2, b2) in zip(pts, pts[1:]):
        if b1 >= target >= b2 and b1 > b2:
            t = (math.log10(b1) - math.log10(target)) \
                / (math.log10(b1) - math.log10(b2))
            return p1 + t * (p2 - p1)
    for p, b in pts:
        if b == target:
            return p
    return None


def gap_at_bler(curve_a: BlerCurve, curve_b: BlerCurve, target_bler: float):
    """Horizontal dB distance between two curves at a target error rate.

    Positive when ``curve_a`` needs less power; ``None`` when either curve
    does not bracket the target.
    """
    if target_bler <= 0:
        raise ValueError("target_bler must be > 0")
    pa = _crossing_db(curve_a, target_bler)
    pb = _crossing_db(curve_b, target_bler)
    if pa is None or pb is None:
        return None
    return pb - pa


def _summary_lines(config: ExperimentConfig, curves) -> list:
    lines = []
    for i, a in enumerate(curves):
        for b in curves[i + 1:]:
            for target in GAP_TARGETS:
                gap = gap_at_bler(a, b, target)
                label = (f"gap_db target={target:g} "
                         f"{a.scheme.value} vs {b.scheme.value}")
                lines.append(f"{label}: {format_real(gap)}" if gap is not None
                             else f"{label}: not computable")
    window = config.slope_window_db
    if window is None:
        window = (config.stop_db - 10.0, config.stop_db)
    for curve in curves:
        label = (f"diversity_slope {curve.scheme.value} "
                 f"window=[{window[0]:g},{window[1]:g}]dB")
        try:
            lines.append(f"{label}: {format_real(diversity_slope(curve, window))}")
        except EstimationError as exc:
            lines.append(f"{label}: not computable ({exc})")
    return lines


def run(config: ExperimentConfig) -> int:
    """Execute the sweep and write CSV, summary and figure artifacts."""
    out = config.output
    out.mkdir(parents=True, exist_ok=True)
    sweep_db = config.power_sweep_db()
    budgets = [config.budget_for(p) for p in sweep_db]
    rng = RngSeed(seed=config.seed)
    curves = []
    for scheme in config.schemes:
        curve = estimate_bler(scheme, config.topology, budgets,
                              config.trials_per_point, rng, power_db=sweep_db,
                              ctrl=config.ctrl, workers=config.workers)
        write_curve_csv(curve, out / f"{scheme.value}__{config.topology.kind.value}.csv")
        curves.append(curve)
    summary = _summary_lines(config, curves)
    (out / "summary.txt").write_text("\n".join(summary) + "\n",
                                     encoding="utf-8", newline="\n")
    render_bler_figure(curves, out / "bler_curves.png",
                       title=f"{config.topology.kind.value}, "
                             f"R={config.topology.relay_count}")
    return 0


def _apply_flag_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.trials is not None:
        updates["trials_per_point"] = args.trials
    if args.out is not None:
        updates["output"] = Path(args.out)
    if not updates:
        return config
    from dataclasses import replace
    return replace(config, **updates)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="netbeam",
        description="Relay-beamforming power-control experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("config", help="path to the experiment config file")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    run_p.add_argument("--trials", type=int, default=None,
                       help="override trials per sweep point")
    run_p.add_argument("--out", default=None, help="override the output directory")
    args = parser.parse_args(argv)

    try:
        config = _apply_flag_overrides(parse_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(config)
    except Exception as exc:  # noqa: BLE001 - report, don't crash with a trace
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
