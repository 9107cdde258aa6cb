"""Link-level Monte Carlo: BPSK over the two-step protocol, maximum-ratio
combining at the receiver, block-error-rate curves and diversity slopes.

A block is one BPSK symbol.  Channels and noises are redrawn independently
per trial (block fading).  Randomness for trial t of sweep point k comes from
the sub-stream (seed, stream, k, t // CHUNK), with a fixed chunk size, so a
curve is bit-identical under any worker count and schemes sharing a seed see
the same channel draws.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import beamsolver, dlsolver
from .beamsolver import PowerBudget
from .channel import ChannelRealization, RngSeed, Topology, realize_block
from .dlsolver import IterationControl

__all__ = [
    "Scheme",
    "TrialOutcome",
    "BlerCurve",
    "EstimationError",
    "run_trial",
    "mrc_decode",
    "estimate_bler",
    "diversity_slope",
    "wilson_interval",
    "allocate_arrays",
    "transmit_arrays",
    "CHUNK_TRIALS",
]

CHUNK_TRIALS = 8192  # fixed batch size; part of the reproducibility contract


class EstimationError(RuntimeError):
    """Not enough usable curve points for the requested estimate."""


class Scheme(enum.Enum):
    """Allocation strategies compared by the simulator."""

    BEAMFORM_NO_DL = "beamform_no_dl"
    BEAMFORM_DL_FIRST = "beamform_dl_first"
    BEAMFORM_DL_SECOND = "beamform_dl_second"
    BEAMFORM_DL_BOTH = "beamform_dl_both"
    BEST_RELAY = "best_relay"
    LARSSON_AGGREGATE = "larsson_aggregate"
    AF_NO_POWER_CONTROL = "af_no_power_control"
    DL_SECOND_FIXED_SPLIT = "dl_second_fixed_split"
    DL_BOTH_FIXED_SPLIT = "dl_both_fixed_split"
    DIRECT_ONLY = "direct_only"

    @property
    def needs_direct_link(self) -> bool:
        return self in _DL_SCHEMES

    @property
    def observes_first_step(self) -> bool:
        """Receiver listens during step one (an x1 branch exists)."""
        return self in {Scheme.BEAMFORM_DL_FIRST, Scheme.BEAMFORM_DL_BOTH,
                        Scheme.DL_BOTH_FIXED_SPLIT, Scheme.DIRECT_ONLY}

    @property
    def transmits_second_step_dl(self) -> bool:
        """Transmitter beams on the direct link during step two (beta0 > 0)."""
        return self in {Scheme.BEAMFORM_DL_SECOND, Scheme.BEAMFORM_DL_BOTH,
                        Scheme.DL_SECOND_FIXED_SPLIT, Scheme.DL_BOTH_FIXED_SPLIT}


_DL_SCHEMES = {Scheme.BEAMFORM_DL_FIRST, Scheme.BEAMFORM_DL_SECOND,
               Scheme.BEAMFORM_DL_BOTH, Scheme.DL_SECOND_FIXED_SPLIT,
               Scheme.DL_BOTH_FIXED_SPLIT, Scheme.DIRECT_ONLY}


@dataclass(frozen=True)
class TrialOutcome:
    transmitted: int
    decided: int
    snr_achieved: float


@dataclass(frozen=True)
class BlerCurve:
    """Block-error-rate estimates over a power sweep, with Wilson 95% CIs."""

    scheme: Scheme
    topology: Topology
    power_db: tuple
    bler: tuple
    trials: tuple
    errors: tuple
    ci95: tuple   # (low, high) per point
    seed: RngSeed
    low_confidence: tuple  # True where no error was observed

    def __post_init__(self):
        n = len(self.power_db)
        if not all(len(x) == n for x in
                   (self.bler, self.trials, self.errors, self.ci95, self.low_confidence)):
            raise ValueError("curve columns must have equal lengths")


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be > 0")
    if not 0 <= errors <= trials:
        raise ValueError("errors must lie in [0, trials]")
    phat = errors / trials
    zz = z * z
    denom = 1.0 + zz / trials
    center = (phat + zz / (2 * trials)) / denom
    half = z * np.sqrt(phat * (1 - phat) / trials + zz / (4 * trials ** 2)) / denom
    lo = 0.0 if errors == 0 else max(0.0, center - half)
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return lo, hi


def allocate_arrays(scheme: Scheme, f_mag, g_mag, f0_mag, budget: PowerBudget,
                    ctrl: IterationControl | None = None):
    """Per-trial power coefficients for a batch of channel draws.

    Returns (alpha0, beta0, alpha, p_relay) where p_relay is the per-relay
    budget the forwarding rule actually uses (the aggregate-power baseline
    nominally hands every relay the whole shared budget).
    """
    n, r_count = f_mag.shape
    p_relay = np.broadcast_to(budget.p, (r_count,)).astype(float)
    ones_a0 = np.ones(n)
    zeros_b0 = np.zeros(n)
    if scheme.needs_direct_link and f0_mag is None:
        raise ValueError(f"{scheme.value} requires a direct-link gain")

    if scheme in (Scheme.BEAMFORM_NO_DL, Scheme.BEAMFORM_DL_FIRST):
        alpha, _, _ = beamsolver.solve_no_dl_arrays(f_mag, g_mag, budget.p0, p_relay)
        return ones_a0, zeros_b0, alpha, p_relay
    if scheme is Scheme.BEST_RELAY:
        _, alpha, _ = beamsolver.best_relay_arrays(f_mag, g_mag, budget.p0, p_relay)
        return ones_a0, zeros_b0, alpha, p_relay
    if scheme is Scheme.LARSSON_AGGREGATE:
        p_total = float(np.max(p_relay))  # aggregate equals one node's cap
        alpha, _ = beamsolver.larsson_alloc_arrays(f_mag, g_mag, budget.p0, p_total)
        return ones_a0, zeros_b0, alpha, np.full(r_count, p_total)
    if scheme is Scheme.AF_NO_POWER_CONTROL:
        return ones_a0, zeros_b0, np.ones((n, r_count)), p_relay
    if scheme is Scheme.BEAMFORM_DL_SECOND:
        a0, alpha, _, _, _, _ = dlsolver.solve_dl_second_arrays(
            f_mag, g_mag, budget.p0, p_relay, f0_mag, ctrl)
        return a0, np.sqrt(np.clip(1 - a0 ** 2, 0, None)), alpha, p_relay
    if scheme is Scheme.BEAMFORM_DL_BOTH:
        a0, alpha, _, _, _, _ = dlsolver.solve_dl_both_arrays(
            f_mag, g_mag, budget.p0, p_relay, f0_mag, ctrl)
        return a0, np.sqrt(np.clip(1 - a0 ** 2, 0, None)), alpha, p_relay
    if scheme in (Scheme.DL_SECOND_FIXED_SPLIT, Scheme.DL_BOTH_FIXED_SPLIT):
        half = np.full(n, np.sqrt(0.5))  # equal power on each step, relays at full
        return half, half.copy(), np.ones((n, r_count)), p_relay
    if scheme is Scheme.DIRECT_ONLY:
        return ones_a0, zeros_b0, np.zeros((n, r_count)), p_relay
    raise ValueError(f"unhandled scheme {scheme}")


def transmit_arrays(scheme: Scheme, f, g, f0, p0, p_relay, alpha0, beta0, alpha,
                    gen: np.random.Generator, noise_scale: float = 1.0):
    """Synthesize one two-step transmission per row and decode it.

    Returns (sent, decided, snr) arrays.  Draw order is fixed: symbols, relay
    noises, step-1 receiver noise, step-2 receiver noise.  ``noise_scale`` is
    a test hook; 0 gives noiseless transmissions.
    """
    n, r_count = f.shape
    if scheme.needs_direct_link and f0 is None:
        raise ValueError(f"{scheme.value} requires a direct-link gain")
    sent = 1 - 2 * gen.integers(0, 2, n)
    cscale = noise_scale * np.sqrt(0.5)
    v = cscale * (gen.standard_normal((n, r_count)) + 1j * gen.standard_normal((n, r_count)))
    w1 = cscale * (gen.standard_normal(n) + 1j * gen.standard_normal(n))
    w2 = cscale * (gen.standard_normal(n) + 1j * gen.standard_normal(n))
    sqrt_p0 = np.sqrt(p0)

    if scheme is Scheme.DIRECT_ONLY:
        x1 = sqrt_p0 * f0 * sent + w1
        metric = np.real(np.conj(sqrt_p0 * f0) * x1)
        decided = np.where(metric >= 0, 1, -1)
        snr = p0 * np.abs(f0) ** 2
        return sent, decided, snr

    a0 = alpha0[:, None]
    received = a0 * sqrt_p0 * f * sent[:, None] + v
    denom = 1.0 + a0 ** 2 * np.abs(f) ** 2 * p0
    relay_gain = alpha * np.sqrt(p_relay / denom) \
        * np.exp(-1j * (np.angle(f) + np.angle(g)))  # match filter
    x2 = np.sum(g * relay_gain * received, axis=1) + w2
    if scheme.transmits_second_step_dl:
        x2 = x2 + beta0 * sqrt_p0 * np.abs(f0) * sent  # phase pre-cancelled

    # effective coefficients the receiver knows
    f0_mag = np.abs(f0) if f0 is not None else 0.0
    a2 = sqrt_p0 * (alpha0 * np.sum(alpha * np.abs(f * g) * np.sqrt(p_relay)
                                    / np.sqrt(denom), axis=1))
    if scheme.transmits_second_step_dl:
        a2 = a2 + sqrt_p0 * beta0 * f0_mag
    noise_var2 = noise_scale ** 2 \
        + np.sum(alpha ** 2 * np.abs(g) ** 2 * p_relay / denom, axis=1) * noise_scale ** 2
    safe_var2 = np.where(noise_var2 > 0, noise_var2, 1.0)  # noiseless hook
    metric = a2 * np.real(x2) / safe_var2
    snr_x1 = np.zeros(n)
    if scheme.observes_first_step:
        a1 = alpha0 * sqrt_p0 * f0
        x1 = a1 * sent + w1
        metric = metric + np.real(np.conj(a1) * x1) / max(noise_scale ** 2, 1e-300)
        snr_x1 = np.abs(a1) ** 2
    decided = np.where(metric >= 0, 1, -1)
    # achieved SNR uses the physical (unit) noise variances
    unit_var2 = 1.0 + np.sum(alpha ** 2 * np.abs(g) ** 2 * p_relay / denom, axis=1)
    snr = snr_x1 + a2 ** 2 / unit_var2
    return sent, decided, snr


def mrc_decode(x1, x2, branch_gains, noise_var2: float) -> int:
    """BPSK decision from the two combined branches.

    Minimizes |x1 - A1 s|^2 + |x2 - A2 s|^2 / noise_var2 over s in {+1, -1},
    equivalently takes the sign of Re(conj(A1) x1) + Re(conj(A2) x2) / noise_var2.
    A missing first branch reduces to the single-branch threshold decision.
    """
    if noise_var2 <= 0:
        raise ValueError("noise_var2 must be > 0")
    a1, a2 = branch_gains
    stat = np.real(np.conj(a2) * x2) / noise_var2
    if x1 is not None:
        stat = stat + np.real(np.conj(a1) * x1)
    return 1 if stat >= 0 else -1


def run_trial(scheme: Scheme, topology: Topology, budget: PowerBudget,
              rng: RngSeed, ctrl: IterationControl | None = None,
              noise_scale: float = 1.0) -> TrialOutcome:
    """One full trial: draw a block's channels, allocate, transmit, decode."""
    if topology.relay_count != budget.relay_count:
        raise ValueError("topology and budget disagree on the relay count")
    gen = rng.generator()
    f, g, f0 = realize_block(topology, gen, 1, with_dl=scheme.needs_direct_link)
    f0_mag = np.abs(f0) if f0 is not None else None
    alpha0, beta0, alpha, p_relay = allocate_arrays(
        scheme, np.abs(f), np.abs(g), f0_mag, budget, ctrl)
    sent, decided, snr = transmit_arrays(scheme, f, g, f0, budget.p0, p_relay,
                                         alpha0, beta0, alpha, gen, noise_scale)
    return TrialOutcome(transmitted=int(sent[0]), decided=int(decided[0]),
                        snr_achieved=float(snr[0]))


def _point_chunk_errors(scheme, topology, budget, rng, point_idx, chunk_idx,
                        n, ctrl) -> int:
    gen = rng.generator(point_idx, chunk_idx)
    f, g, f0 = realize_block(topology, gen, n, with_dl=scheme.needs_direct_link)
    f0_mag = np.abs(f0) if f0 is not None else None
    alpha0, beta0, alpha, p_relay = allocate_arrays(
        scheme, np.abs(f), np.abs(g), f0_mag, budget, ctrl)
    sent, decided, _ = transmit_arrays(scheme, f, g, f0, budget.p0, p_relay,
                                       alpha0, beta0, alpha, gen)
    return int(np.sum(sent != decided))


def estimate_bler(scheme: Scheme, topology: Topology,
                  budget_sweep: Sequence[PowerBudget], trials_per_point: int,
                  rng: RngSeed, *, power_db: Sequence[float] | None = None,
                  ctrl: IterationControl | None = None, workers: int = 1) -> BlerCurve:
    """Monte Carlo block-error-rate curve over a power sweep.

    ``power_db`` labels default to 10 log10 of each budget's transmitter
    power.  Results are deterministic for a fixed seed regardless of
    ``workers``: chunk error counts are accumulated per point, and chunk
    randomness depends only on (seed, stream, point, chunk).
    """
    if trials_per_point < 1:
        raise ValueError("trials_per_point must be >= 1")
    budgets = list(budget_sweep)
    if not budgets:
        raise ValueError("empty power sweep")
    for b in budgets:
        if b.relay_count != topology.relay_count:
            raise ValueError("budget and topology disagree on the relay count")
    if power_db is None:
        power_db = [10.0 * np.log10(b.p0) for b in budgets]
    elif len(power_db) != len(budgets):
        raise ValueError("power_db and budget_sweep lengths differ")

    jobs = []
    for k, budget in enumerate(budgets):
        n_chunks = (trials_per_point + CHUNK_TRIALS - 1) // CHUNK_TRIALS
        for c in range(n_chunks):
            n = min(CHUNK_TRIALS, trials_per_point - c * CHUNK_TRIALS)
            jobs.append((k, c, n, budget))

    errors = np.zeros(len(budgets), dtype=np.int64)

    def work(job):
        k, c, n, budget = job
        return k, _point_chunk_errors(scheme, topology, budget, rng, k, c, n, ctrl)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for k, e in pool.map(work, jobs):
                errors[k] += e
    else:
        for job in jobs:
            k, e = work(job)
            errors[k] += e

    bler = errors / trials_per_point
    ci = [wilson_interval(int(e), trials_per_point) for e in errors]
    return BlerCurve(scheme=scheme, topology=topology,
                     power_db=tuple(float(x) for x in power_db),
                     bler=tuple(float(x) for x in bler),
                     trials=tuple([trials_per_point] * len(budgets)),
                     errors=tuple(int(e) for e in errors),
                     ci95=tuple(ci), seed=rng,
                     low_confidence=tuple(bool(e == 0) for e in errors))


def diversity_slope(curve: BlerCurve, window_db) -> float:
    """Diversity estimate: minus the least-squares slope of log10(bler)
    against P_dB / 10 over the window (needs >= 3 points, all with errors)."""
    lo, hi = window_db
    pts = [(p, b, e) for p, b, e in zip(curve.power_db, curve.bler, curve.errors)
           if lo - 1e-9 <= p <= hi + 1e-9]
    if len(pts) < 3:
        raise EstimationError("need at least 3 sweep points inside the window")
    if any(e == 0 for _, _, e in pts):
        raise EstimationError("window contains points with no observed errors")
    x = np.array([p / 10.0 for p, _, _ in pts])
    y = np.log10([b for _, b, _ in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)
