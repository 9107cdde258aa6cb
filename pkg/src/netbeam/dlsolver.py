"""Power control when a transmitter-receiver link is present.

Three cases, by when the direct link is active:

* first step only -- the receiver just gains a second observation, so the
  transmit-side optimum is identical to the no-direct-link solve;
* second step only -- the transmitter splits power across the two steps
  (alpha0 on step one, beta0 = sqrt(1 - alpha0^2) on step two) and the relay
  fractions for a fixed split have the same ranked closed form as the
  no-direct-link case, with the split's direct-link amplitude entering the
  water-level ratio; the split itself is found numerically;
* both steps -- as above plus the first-step branch SNR alpha0^2 P0 |f0|^2
  added to the objective.

The second- and both-step solvers alternate an exact 1-D split optimization
with the exact fixed-split relay solve, then take the best of that iterate
and the full-split (alpha0 = 1) and, for the second-step case, the
direct-link-only (alpha0 = 0) candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .beamsolver import (
    PowerAllocation,
    PowerBudget,
    solve_no_dl,
    solve_no_dl_arrays,
)
from .channel import ChannelRealization

__all__ = [
    "DlWorkspace",
    "IterationControl",
    "HighSnrCoeffs",
    "DlAllocation",
    "Alpha0Root",
    "solve_dl_first",
    "psi",
    "psi_arrays",
    "build_dl_workspace",
    "solve_relays_fixed_alpha0",
    "solve_relays_fixed_alpha0_arrays",
    "optimize_alpha0_second",
    "high_snr_coeffs",
    "alpha0_high_snr",
    "solve_dl_second",
    "solve_dl_second_arrays",
    "solve_dl_both",
    "solve_dl_both_arrays",
]

_BOX_SLACK = 1e-12
_ALPHA0_FLOOR = 1e-6  # interior search bound for the transmitter split
_INV_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class IterationControl:
    """Alternation limits: iteration cap and SNR convergence threshold.

    ``tol`` is an absolute linear-SNR threshold; ``None`` means relative,
    1e-6 of the current objective.
    """

    max_iter: int = 20
    tol: float | None = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be > 0")

    def threshold(self, snr):
        if self.tol is not None:
            return self.tol
        return 1e-6 * np.maximum(np.asarray(snr, dtype=float), 1e-300)


@dataclass(frozen=True)
class DlWorkspace:
    """Fixed-split solver coefficients, analogous to the no-link workspace.

    ``lam`` is indexed by prefix length 0..R; its denominator carries the
    second-step direct-link amplitude ``dl_amp = sqrt(1 - alpha0^2) |f0|``,
    which is what makes the empty prefix (no full-power relay) viable.
    """

    a_hat: np.ndarray
    b_hat: np.ndarray
    c_hat: np.ndarray
    phi_hat: np.ndarray
    tau_hat: np.ndarray
    lam: np.ndarray
    dl_amp: float


@dataclass(frozen=True)
class DlAllocation(PowerAllocation):
    """Allocation plus alternation diagnostics."""

    converged: bool = True
    iterations: int = 0
    trace: tuple = ()  # (alpha0, objective) after each alternation step


class Alpha0Root(NamedTuple):
    alpha0: float
    from_quartic: bool  # False when the closed form failed and a scan was used


@dataclass(frozen=True)
class HighSnrCoeffs:
    """Aggregates entering the high-power surrogate for the split objective."""

    d1: float  # sum alpha_i |g_i| sqrt(P_i) / sqrt(P0)
    d2: float  # sum alpha_i^2 |g_i / f_i|^2 P_i / P0

    def __post_init__(self):
        if self.d1 < 0 or self.d2 < 0:
            raise ValueError("coefficients must be >= 0")


def _magnitudes(ch: ChannelRealization, budget: PowerBudget):
    if ch.relay_count != budget.relay_count:
        raise ValueError("channel and budget disagree on the relay count")
    return np.abs(ch.f)[None, :], np.abs(ch.g)[None, :]


def _validate_box(alpha: np.ndarray):
    if np.any(alpha < -_BOX_SLACK) or np.any(alpha > 1.0 + _BOX_SLACK):
        raise ValueError("relay fractions must lie in [0, 1]")


def solve_dl_first(ch: ChannelRealization, budget: PowerBudget) -> PowerAllocation:
    """Power control with the direct link active during the first step only.

    Identical to the no-direct-link allocation; the returned snr is the relay
    branch alone, the extra branch alpha0^2 P0 |f0|^2 is added by the
    link-level simulator when combining.
    """
    if ch.f0 is None:
        raise ValueError("first-step direct link requires f0")
    return solve_no_dl(ch, budget)


def psi_arrays(f_mag, g_mag, p0, p, f0_mag, alpha0, alpha) -> np.ndarray:
    """Second-step receive SNR for (N, R) arrays under split ``alpha0``."""
    alpha0 = np.asarray(alpha0, dtype=float)
    a0 = alpha0[..., None]
    denom = 1.0 + a0 ** 2 * f_mag ** 2 * p0
    relay = alpha0 * np.sum(alpha * f_mag * g_mag * np.sqrt(p) / np.sqrt(denom), axis=-1)
    dl = np.sqrt(np.clip(1.0 - alpha0 ** 2, 0.0, None)) * f0_mag
    noise = 1.0 + np.sum(alpha ** 2 * g_mag ** 2 * p / denom, axis=-1)
    return p0 * (dl + relay) ** 2 / noise


def psi(ch: ChannelRealization, budget: PowerBudget, f0_mag: float,
        alpha0: float, alpha) -> float:
    """Second-step receive SNR: the transmitter puts sqrt(1 - alpha0^2) of its
    amplitude on the direct link while relays forward the first-step signal."""
    if not 0.0 <= alpha0 <= 1.0:
        raise ValueError("alpha0 must lie in [0, 1]")
    if f0_mag < 0:
        raise ValueError("f0_mag must be >= 0")
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    _validate_box(alpha)
    f_mag, g_mag = _magnitudes(ch, budget)
    return float(psi_arrays(f_mag, g_mag, budget.p0, budget.p, f0_mag,
                            np.asarray([alpha0]), alpha[None, :])[0])


def solve_relays_fixed_alpha0_arrays(f_mag, g_mag, p0, p, f0_mag, alpha0):
    """Exact relay fractions maximizing psi at a fixed transmitter split.

    Same ranked structure as the no-link solve, except the prefix may be
    empty (i0 = 0) because the direct-link amplitude already contributes
    signal.  Returns (alpha, i0, lam_star) for (N, R) inputs.
    """
    n, r_count = f_mag.shape
    alpha0 = np.broadcast_to(np.asarray(alpha0, dtype=float), (n,))
    if np.any(alpha0 <= 0):
        raise ValueError("alpha0 must be > 0 (the ranking statistic vanishes at 0)")
    f0_mag = np.broadcast_to(np.asarray(f0_mag, dtype=float), (n,))
    a0 = alpha0[:, None]
    denom = np.sqrt(1.0 + a0 ** 2 * f_mag ** 2 * p0)
    valid = (f_mag > 0) & (g_mag > 0)
    sqrt_p = np.sqrt(np.broadcast_to(p, f_mag.shape))
    a_hat = np.where(valid, g_mag * sqrt_p / denom, 0.0)
    b_hat = np.where(valid, a0 * f_mag * g_mag * sqrt_p / denom, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_hat = np.where(valid, a0 * f_mag * denom / (g_mag * sqrt_p), 0.0)
    dl_amp = np.sqrt(np.clip(1.0 - alpha0 ** 2, 0.0, None)) * f0_mag

    order = np.argsort(-phi_hat, axis=1, kind="stable")
    phi_s = np.take_along_axis(phi_hat, order, axis=1)
    a2_s = np.take_along_axis(a_hat, order, axis=1) ** 2
    b_s = np.take_along_axis(b_hat, order, axis=1)
    zeros = np.zeros((n, 1))
    sum_a2 = 1.0 + np.concatenate([zeros, np.cumsum(a2_s, axis=1)], axis=1)
    sum_b = dl_amp[:, None] + np.concatenate([zeros, np.cumsum(b_s, axis=1)], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = sum_a2 / sum_b
        phi_next = np.concatenate([phi_s, zeros], axis=1)
        cond = lam * phi_next < 1.0
    i0 = np.argmax(cond, axis=1)  # first prefix length 0..R meeting the condition
    lam_star = np.take_along_axis(lam, i0[:, None], axis=1)
    ranks = np.arange(r_count)[None, :]
    with np.errstate(invalid="ignore"):
        partial = np.clip(lam_star * phi_s, 0.0, 1.0)
    alpha_s = np.where(ranks < i0[:, None], 1.0, partial)
    alpha = np.empty_like(alpha_s)
    np.put_along_axis(alpha, order, alpha_s, axis=1)
    dead = ~np.isfinite(lam_star[:, 0])  # no direct-link amplitude, no live relay
    if np.any(dead):
        alpha[dead] = 0.0
        i0[dead] = 0
    return alpha, i0, lam_star[:, 0]


def build_dl_workspace(ch: ChannelRealization, budget: PowerBudget,
                       f0_mag: float, alpha0: float) -> DlWorkspace:
    """Fixed-split coefficients for one realization (mainly for inspection)."""
    if not 0.0 < alpha0 <= 1.0:
        raise ValueError("alpha0 must lie in (0, 1]")
    f_mag, g_mag = _magnitudes(ch, budget)
    a0 = float(alpha0)
    denom = np.sqrt(1.0 + a0 ** 2 * f_mag ** 2 * budget.p0)
    valid = (f_mag > 0) & (g_mag > 0)
    sqrt_p = np.sqrt(np.broadcast_to(budget.p, f_mag.shape))
    a_hat = np.where(valid, g_mag * sqrt_p / denom, 0.0)[0]
    b_hat = np.where(valid, a0 * f_mag * g_mag * sqrt_p / denom, 0.0)[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_hat = np.where(valid, a0 * f_mag * denom / (g_mag * sqrt_p), 0.0)[0]
        c_hat = np.where(valid[0], a0 * f_mag[0], 0.0)
    dl_amp = float(np.sqrt(max(1.0 - a0 ** 2, 0.0)) * f0_mag)
    tau = np.argsort(-phi_hat, kind="stable")
    sum_a2 = 1.0 + np.concatenate([[0.0], np.cumsum(a_hat[tau] ** 2)])
    sum_b = dl_amp + np.concatenate([[0.0], np.cumsum(b_hat[tau])])
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = sum_a2 / sum_b
    return DlWorkspace(a_hat=a_hat, b_hat=b_hat, c_hat=c_hat, phi_hat=phi_hat,
                       tau_hat=tau, lam=lam, dl_amp=dl_amp)


def solve_relays_fixed_alpha0(ch: ChannelRealization, budget: PowerBudget,
                              f0_mag: float, alpha0: float) -> PowerAllocation:
    """Best relay fractions for a fixed transmitter split alpha0 in (0, 1]."""
    if not 0.0 < alpha0 <= 1.0:
        raise ValueError("alpha0 must lie in (0, 1]")
    if f0_mag < 0:
        raise ValueError("f0_mag must be >= 0")
    f_mag, g_mag = _magnitudes(ch, budget)
    alpha, i0, _ = solve_relays_fixed_alpha0_arrays(
        f_mag, g_mag, budget.p0, budget.p, f0_mag, np.asarray([alpha0]))
    value = psi_arrays(f_mag, g_mag, budget.p0, budget.p, f0_mag,
                       np.asarray([alpha0]), alpha)[0]
    beta0 = float(np.sqrt(max(1.0 - alpha0 ** 2, 0.0)))
    return PowerAllocation(alpha0=float(alpha0), beta0=beta0, alpha=alpha[0],
                           snr=float(value), i0=int(i0[0]))


def _maximize_alpha0(objective, n: int, lo: float = _ALPHA0_FLOOR,
                     hi: float = 1.0 - _ALPHA0_FLOOR, extra=None,
                     coarse: int = 33, golden_iters: int = 16,
                     bisect_iters: int = 24, fd_step: float = 1e-6):
    """Vectorized 1-D maximization of ``objective`` over [lo, hi] per row.

    A coarse scan picks the basin (serving as the multistart), golden-section
    narrows it, and bisection on the central-difference derivative sign
    polishes the bracket to ~1e-9 absolute.  ``extra`` supplies optional
    per-row start candidates (e.g. the closed-form high-power root).
    """
    xs = np.linspace(lo, hi, coarse)
    vals = np.empty((coarse, n))
    for k, x in enumerate(xs):
        vals[k] = objective(np.full(n, x))
    k_best = np.argmax(vals, axis=0)
    best_x = xs[k_best]
    best_v = np.take_along_axis(vals, k_best[None, :], axis=0)[0]
    if extra is not None:
        ex = np.clip(np.broadcast_to(np.asarray(extra, dtype=float), (n,)), lo, hi)
        ev = objective(ex)
        better = ev > best_v
        best_x = np.where(better, ex, best_x)
        best_v = np.where(better, ev, best_v)
    dx = (hi - lo) / (coarse - 1)
    a = np.clip(best_x - dx, lo, hi)
    b = np.clip(best_x + dx, lo, hi)
    for _ in range(golden_iters):
        span = b - a
        c = b - _INV_GOLDEN * span
        d = a + _INV_GOLDEN * span
        keep_left = objective(c) >= objective(d)
        b = np.where(keep_left, d, b)
        a = np.where(keep_left, a, c)
    for _ in range(bisect_iters):
        mid = 0.5 * (a + b)
        h = fd_step * np.maximum(1.0, np.abs(mid))
        up = objective(np.clip(mid + h, lo, hi))
        down = objective(np.clip(mid - h, lo, hi))
        rising = up >= down
        a = np.where(rising, mid, a)
        b = np.where(rising, b, mid)
    x_fin = 0.5 * (a + b)
    v_fin = objective(x_fin)
    worse = v_fin < best_v
    return np.where(worse, best_x, x_fin), np.where(worse, best_v, v_fin)


def high_snr_coeffs(ch: ChannelRealization, budget: PowerBudget, alpha) -> HighSnrCoeffs:
    """Aggregates for the high-power surrogate of the split objective."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    _validate_box(alpha)
    f_mag, g_mag = _magnitudes(ch, budget)
    f_mag, g_mag = f_mag[0], g_mag[0]
    live = alpha > 0
    if np.any(live & (f_mag <= 0)):
        raise ValueError("surrogate undefined: a contributing relay has zero source channel")
    d1 = float(np.sum(alpha * g_mag * np.sqrt(budget.p)) / np.sqrt(budget.p0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(live, (g_mag / np.where(live, f_mag, 1.0)) ** 2, 0.0)
    d2 = float(np.sum(alpha ** 2 * ratio * budget.p) / budget.p0)
    return HighSnrCoeffs(d1=d1, d2=d2)


def _surrogate(a0, f0_mag, d1, d2):
    """High-power approximation of psi, up to the constant P0 factor."""
    return (np.sqrt(np.clip(1.0 - a0 ** 2, 0.0, None)) * f0_mag + d1) ** 2 \
        / (1.0 + d2 / a0 ** 2)


def alpha0_high_snr(f0_mag: float, coeffs: HighSnrCoeffs) -> Alpha0Root:
    """Closed-form split from the high-power surrogate.

    Setting the surrogate's derivative to zero and squaring away the radical
    gives a quartic in t = alpha0^2:

        F^2 t^4 + 4 d2 F^2 t^3 + (4 d2^2 - 2 d2) F^2 t^2
            + d2^2 (d1^2 - 4 F^2) t + d2^2 (F^2 - d1^2) = 0,   F = |f0|.

    Squaring introduces sign-mismatched branches, so real roots in (0, 1) are
    filtered against the unsquared stationarity condition before picking the
    one maximizing the surrogate.  When no root survives, a numeric scan of
    the surrogate is used instead and the result is flagged.
    """
    if f0_mag <= 0:
        raise ValueError("f0_mag must be > 0")
    if coeffs.d2 <= 0:
        raise ValueError("d2 must be > 0")
    sq_f0 = f0_mag ** 2
    d1, d2 = coeffs.d1, coeffs.d2
    poly = [sq_f0,
            4.0 * d2 * sq_f0,
            (4.0 * d2 ** 2 - 2.0 * d2) * sq_f0,
            d2 ** 2 * (d1 ** 2 - 4.0 * sq_f0),
            d2 ** 2 * (sq_f0 - d1 ** 2)]
    candidates = []
    for root in np.roots(poly):
        if abs(root.imag) > 1e-9 * (1.0 + abs(root.real)):
            continue
        t = float(root.real)
        if not 0.0 < t < 1.0:
            continue
        lhs = f0_mag * (t ** 2 + 2.0 * d2 * t - d2)
        rhs = d1 * d2 * np.sqrt(1.0 - t)
        if abs(lhs - rhs) > 1e-6 * max(abs(lhs), abs(rhs), 1e-12):
            continue
        candidates.append(np.sqrt(t))
    if candidates:
        best = max(candidates, key=lambda a0: _surrogate(a0, f0_mag, d1, d2))
        return Alpha0Root(alpha0=float(best), from_quartic=True)
    x, _ = _maximize_alpha0(lambda v: _surrogate(v, f0_mag, d1, d2), 1)
    return Alpha0Root(alpha0=float(x[0]), from_quartic=False)


def optimize_alpha0_second(ch: ChannelRealization, budget: PowerBudget,
                           f0_mag: float, alpha) -> float:
    """Best transmitter split for fixed relay fractions (second-step link).

    Interior search on [1e-6, 1 - 1e-6] to ~1e-9 absolute; the closed-form
    high-power root is added as a start candidate when it is computable.
    Degenerate inputs where an endpoint wins return that endpoint (a zero
    direct link pushes the objective up against alpha0 = 1).
    """
    if f0_mag < 0:
        raise ValueError("f0_mag must be >= 0")
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    _validate_box(alpha)
    f_mag, g_mag = _magnitudes(ch, budget)
    alpha_row = alpha[None, :]

    def objective(a0):
        return psi_arrays(f_mag, g_mag, budget.p0, budget.p, f0_mag, a0, alpha_row)

    extra = None
    if f0_mag > 0:
        try:
            coeffs = high_snr_coeffs(ch, budget, alpha)
            if coeffs.d2 > 0:
                extra = alpha0_high_snr(f0_mag, coeffs).alpha0
        except ValueError:
            extra = None
    x, v = _maximize_alpha0(objective, 1, extra=extra)
    at_one = objective(np.asarray([1.0]))[0]
    if at_one >= v[0]:
        return 1.0
    at_zero = objective(np.asarray([0.0]))[0]
    if at_zero > v[0]:
        return 0.0
    return float(x[0])


def _alternate_arrays(f_mag, g_mag, p0, p, f0_mag, ctrl, include_first_step_dl,
                      trace_out=None):
    """Shared alternation for the second-step and both-step solvers.

    Returns per-row (alpha0, alpha, i0, snr, converged, iterations) where snr
    is the full objective (psi, plus the first-step branch when included).
    """
    n, r_count = f_mag.shape
    f0_mag = np.broadcast_to(np.asarray(f0_mag, dtype=float), (n,))

    def value_rows(rows, a0, x):
        out = psi_arrays(f_mag[rows], g_mag[rows], p0, p, f0_mag[rows], a0, x)
        if include_first_step_dl:
            out = out + a0 ** 2 * p0 * f0_mag[rows] ** 2
        return out

    ones = np.ones(n)
    all_rows = np.arange(n)
    x_full, i0_full, _ = solve_relays_fixed_alpha0_arrays(f_mag, g_mag, p0, p,
                                                          f0_mag, ones)
    cand_full = value_rows(all_rows, ones, x_full)
    # best objective already guaranteed by the boundary candidates; iterating
    # rows provably below this floor can retire early (the final argmax
    # returns the candidate for them either way)
    floor = cand_full if include_first_step_dl \
        else np.maximum(cand_full, p0 * f0_mag ** 2)

    x = np.ones((n, r_count))
    a0 = np.ones(n)
    snr_prev = np.zeros(n)
    snr = np.zeros(n)
    i0 = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    delta_prev = np.full(n, np.inf)
    # each row iterates until its own delta passes the threshold; finished
    # rows are compacted away so stragglers don't cost full-batch work
    active = np.arange(n)
    iterations = 0
    for iterations in range(1, ctrl.max_iter + 1):
        rows = active
        x_rows = x[rows]
        extra = a0[rows] if iterations > 1 else None  # keeps the split step an ascent
        a0_rows, _ = _maximize_alpha0(lambda v: value_rows(rows, v, x_rows),
                                      rows.size, extra=extra)
        x_rows, i0_rows, _ = solve_relays_fixed_alpha0_arrays(
            f_mag[rows], g_mag[rows], p0, p, f0_mag[rows], a0_rows)
        snr_rows = value_rows(rows, a0_rows, x_rows)
        a0[rows] = a0_rows
        x[rows] = x_rows
        i0[rows] = i0_rows
        snr[rows] = snr_rows
        delta_rows = np.abs(snr_rows - snr_prev[rows])
        snr_prev[rows] = snr_rows
        if trace_out is not None and n == 1:
            trace_out.append((float(a0[0]), float(snr[0])))
        done = delta_rows <= ctrl.threshold(snr_rows)
        if iterations >= 3:
            # geometric crawls headed below the candidate floor cannot win:
            # even a 1.5x-inflated extrapolated limit stays under the floor,
            # so the final argmax returns the candidate for them regardless
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = delta_rows / delta_prev[rows]
                headroom = 1.5 * delta_rows * ratio / (1.0 - ratio)
            done = done | ((ratio < 0.97) & (snr_rows + headroom <= floor[rows]))
        converged[rows[done]] = True
        delta_prev[rows] = delta_rows
        active = rows[~done]
        if active.size == 0:
            break

    cand_snr = [snr, cand_full]
    cand_a0 = [a0, ones]
    cand_x = [x, x_full]
    cand_i0 = [i0, i0_full]
    if not include_first_step_dl:
        # direct link only: transmitter spends everything on the second step
        cand_snr.append(p0 * f0_mag ** 2)
        cand_a0.append(np.zeros(n))
        cand_x.append(np.zeros((n, r_count)))
        cand_i0.append(np.zeros(n, dtype=int))
    stacked = np.stack(cand_snr)
    pick = np.argmax(stacked, axis=0)
    rows = np.arange(n)
    out_snr = stacked[pick, rows]
    out_a0 = np.stack(cand_a0)[pick, rows]
    out_x = np.stack(cand_x)[pick, rows, :]
    out_i0 = np.stack(cand_i0)[pick, rows]
    return out_a0, out_x, out_i0, out_snr, converged, iterations


def solve_dl_second_arrays(f_mag, g_mag, p0, p, f0_mag,
                           ctrl: IterationControl | None = None):
    """Vectorized second-step-link solve; snr column is psi at the winner."""
    ctrl = ctrl or IterationControl()
    return _alternate_arrays(f_mag, g_mag, p0, p, f0_mag, ctrl,
                             include_first_step_dl=False)


def solve_dl_both_arrays(f_mag, g_mag, p0, p, f0_mag,
                         ctrl: IterationControl | None = None):
    """Vectorized both-step-link solve; snr column is the total of both branches."""
    ctrl = ctrl or IterationControl()
    return _alternate_arrays(f_mag, g_mag, p0, p, f0_mag, ctrl,
                             include_first_step_dl=True)


def _solve_dl_scalar(ch, budget, f0_mag, ctrl, include_first_step_dl) -> DlAllocation:
    if f0_mag < 0:
        raise ValueError("f0_mag must be >= 0")
    ctrl = ctrl or IterationControl()
    f_mag, g_mag = _magnitudes(ch, budget)
    trace: list = []
    a0, alpha, i0, snr, converged, iterations = _alternate_arrays(
        f_mag, g_mag, budget.p0, budget.p, np.asarray([f0_mag]), ctrl,
        include_first_step_dl, trace_out=trace)
    alpha0 = float(a0[0])
    return DlAllocation(alpha0=alpha0,
                        beta0=float(np.sqrt(max(1.0 - alpha0 ** 2, 0.0))),
                        alpha=alpha[0], snr=float(snr[0]), i0=int(i0[0]),
                        converged=bool(converged[0]), iterations=iterations,
                        trace=tuple(trace))


def solve_dl_second(ch: ChannelRealization, budget: PowerBudget, f0_mag: float,
                    ctrl: IterationControl | None = None) -> DlAllocation:
    """Power control with the direct link active during the second step only.

    Alternates the split optimization and the fixed-split relay solve from an
    all-ones start, then returns the best of the final iterate, the full
    split (alpha0 = 1), and the link-only split (alpha0 = 0).  Hitting the
    iteration cap is not an error; the result is flagged unconverged.
    """
    return _solve_dl_scalar(ch, budget, f0_mag, ctrl, include_first_step_dl=False)


def solve_dl_both(ch: ChannelRealization, budget: PowerBudget, f0_mag: float,
                  ctrl: IterationControl | None = None) -> DlAllocation:
    """Power control with the direct link active during both steps.

    Objective adds the first-step branch alpha0^2 P0 |f0|^2 to psi; the
    returned snr is that total.  The all-link split (alpha0 = 0) can never
    beat alpha0 = 1 here, so only the iterate and the full split compete.
    """
    return _solve_dl_scalar(ch, budget, f0_mag, ctrl, include_first_step_dl=True)
