"""Exact receive-SNR-maximizing power control for the relay-only network.

The two-step protocol: the transmitter sends at full power, each relay
forwards a phase-aligned, scaled copy of what it heard.  Maximizing the
combined receive SNR over per-relay power fractions alpha_i in [0, 1] has a
closed-form solution: rank relays by the statistic

    phi_j = |f_j| sqrt(1 + |f_j|^2 P0) / (|g_j| sqrt(P_j)),

give full power to the top ``i0`` of them, and scale the rest proportionally
to their phi.  ``i0`` is the first prefix length whose water-level ratio
``lam_i = (1 + sum a^2) / (sum b)`` drops below the next relay's 1/phi; once
that holds it holds for every longer prefix, so a single linear scan after
the sort suffices.

Also provides the baseline allocators (single best relay, aggregate-power
allocation) and an exhaustive grid oracle used for verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ChannelRealization

__all__ = [
    "DegenerateRelayError",
    "ResourceLimitError",
    "PowerBudget",
    "SolverWorkspace",
    "PowerAllocation",
    "phi_statistic",
    "build_workspace",
    "receive_snr_no_dl",
    "receive_snr_no_dl_arrays",
    "solve_no_dl",
    "solve_no_dl_arrays",
    "oracle_grid",
    "oracle_grid_arrays",
    "select_best_relay",
    "best_relay_arrays",
    "larsson_alloc",
    "larsson_alloc_arrays",
]

_BOX_SLACK = 1e-12          # tolerance when validating alpha in [0, 1]
_GRID_POINT_BUDGET = 2 ** 25  # refuse exhaustive grids beyond this many points


class DegenerateRelayError(ValueError):
    """A relay with a zero channel or zero budget cannot be ranked."""


class ResourceLimitError(RuntimeError):
    """A brute-force helper would exceed its compute budget."""


@dataclass(frozen=True)
class PowerBudget:
    """Per-node maximum transmit powers, linear scale."""

    p0: float
    p: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if self.p0 <= 0 or np.any(p <= 0):
            raise ValueError("all power limits must be > 0")
        object.__setattr__(self, "p", p)

    @property
    def relay_count(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True)
class SolverWorkspace:
    """Per-relay solver coefficients for one realization.

    ``b = a * c`` holds identically; ``tau`` sorts ``phi`` descending with
    ties broken by ascending relay index.  Degenerate relays (zero source or
    destination channel) have all coefficients zeroed.
    """

    a: np.ndarray    # noise-amplification coefficients |g| sqrt(P) / sqrt(1 + |f|^2 P0)
    b: np.ndarray    # signal coefficients |f g| sqrt(P) / sqrt(1 + |f|^2 P0)
    c: np.ndarray    # source-side magnitudes |f|
    phi: np.ndarray  # full-power ranking statistic c / a
    tau: np.ndarray  # relay indices, phi descending


@dataclass(frozen=True)
class PowerAllocation:
    """Solver output: transmitter split, relay fractions, achieved SNR."""

    alpha0: float
    beta0: float
    alpha: np.ndarray
    snr: float
    i0: int

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if self.alpha0 ** 2 + self.beta0 ** 2 > 1.0 + 1e-9:
            raise ValueError("transmitter power split exceeds its budget")
        if np.any(alpha < -_BOX_SLACK) or np.any(alpha > 1.0 + _BOX_SLACK):
            raise ValueError("relay fractions must lie in [0, 1]")
        if not 0 <= self.i0 <= alpha.shape[0]:
            raise ValueError("full-power count out of range")
        object.__setattr__(self, "alpha", alpha)


def phi_statistic(f_mag: float, g_mag: float, p0: float, pj: float) -> float:
    """Ranking statistic deciding which relays transmit at full power.

    Monotone increasing in ``f_mag``, decreasing in ``g_mag`` and ``pj``.
    """
    if g_mag <= 0 or pj <= 0:
        raise DegenerateRelayError("relay has no usable destination channel or budget")
    if f_mag < 0 or p0 <= 0:
        raise ValueError("f_mag must be >= 0 and p0 > 0")
    return f_mag * np.sqrt(1.0 + f_mag ** 2 * p0) / (g_mag * np.sqrt(pj))


def _magnitudes(ch: ChannelRealization, relay_count: int):
    if ch.relay_count != relay_count:
        raise ValueError("channel and budget disagree on the relay count")
    return np.abs(ch.f)[None, :], np.abs(ch.g)[None, :]


def _coefficients(f_mag: np.ndarray, g_mag: np.ndarray, p0: float, p: np.ndarray):
    """Vectorized solver coefficients; degenerate relays zeroed out.

    Relays with zero destination channel would otherwise rank first with an
    infinite phi while contributing no signal, so they are excluded here.
    """
    denom = np.sqrt(1.0 + f_mag ** 2 * p0)
    valid = (f_mag > 0) & (g_mag > 0)
    sqrt_p = np.sqrt(np.broadcast_to(p, f_mag.shape))
    a = np.where(valid, g_mag * sqrt_p / denom, 0.0)
    b = np.where(valid, f_mag * g_mag * sqrt_p / denom, 0.0)
    c = np.where(valid, f_mag, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(valid, f_mag * denom / (g_mag * sqrt_p), 0.0)
    return a, b, c, phi


def build_workspace(ch: ChannelRealization, budget: PowerBudget) -> SolverWorkspace:
    """Coefficients and phi-ordering for one realization."""
    f_mag, g_mag = _magnitudes(ch, budget.relay_count)
    a, b, c, phi = _coefficients(f_mag, g_mag, budget.p0, budget.p)
    tau = np.argsort(-phi[0], kind="stable")
    return SolverWorkspace(a=a[0], b=b[0], c=c[0], phi=phi[0], tau=tau)


def _validate_box(alpha: np.ndarray):
    if np.any(alpha < -_BOX_SLACK) or np.any(alpha > 1.0 + _BOX_SLACK):
        raise ValueError("relay fractions must lie in [0, 1]")


def receive_snr_no_dl_arrays(f_mag, g_mag, p0, p, alpha) -> np.ndarray:
    """Receive SNR for (N, R) magnitude arrays at full transmitter power."""
    denom = 1.0 + f_mag ** 2 * p0
    signal = np.sum(alpha * f_mag * g_mag * np.sqrt(p) / np.sqrt(denom), axis=-1)
    noise = 1.0 + np.sum(alpha ** 2 * g_mag ** 2 * p / denom, axis=-1)
    return p0 * signal ** 2 / noise


def receive_snr_no_dl(ch: ChannelRealization, budget: PowerBudget, alpha) -> float:
    """Receive SNR of the relay branch for a given fraction vector."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    _validate_box(alpha)
    f_mag, g_mag = _magnitudes(ch, budget.relay_count)
    return float(receive_snr_no_dl_arrays(f_mag, g_mag, budget.p0, budget.p,
                                          alpha[None, :])[0])


def solve_no_dl_arrays(f_mag: np.ndarray, g_mag: np.ndarray, p0: float, p: np.ndarray):
    """Vectorized exact solve over (N, R) magnitude arrays.

    Returns (alpha, snr, i0) with shapes (N, R), (N,), (N,).  Rows where no
    relay carries signal come back all-zero with snr 0 and i0 0.
    """
    n, r_count = f_mag.shape
    a, b, _, phi = _coefficients(f_mag, g_mag, p0, p)
    order = np.argsort(-phi, axis=1, kind="stable")
    phi_s = np.take_along_axis(phi, order, axis=1)
    a2_s = np.take_along_axis(a, order, axis=1) ** 2
    b_s = np.take_along_axis(b, order, axis=1)
    sum_a2 = 1.0 + np.cumsum(a2_s, axis=1)
    sum_b = np.cumsum(b_s, axis=1)
    phi_next = np.concatenate([phi_s[:, 1:], np.zeros((n, 1))], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = sum_a2 / sum_b
        # lam_i < 1/phi_next, written multiplicatively so the phi = 0 sentinel
        # (always true) and degenerate rows (NaN, never true) need no branches
        cond = lam * phi_next < 1.0
    i0 = 1 + np.argmax(cond, axis=1)
    lam_star = np.take_along_axis(lam, (i0 - 1)[:, None], axis=1)
    ranks = np.arange(r_count)[None, :]
    with np.errstate(invalid="ignore"):
        alpha_s = np.where(ranks < i0[:, None], 1.0,
                           np.clip(lam_star * phi_s, 0.0, 1.0))
    alpha = np.empty_like(alpha_s)
    np.put_along_axis(alpha, order, alpha_s, axis=1)
    snr = receive_snr_no_dl_arrays(f_mag, g_mag, p0, p, alpha)
    dead = sum_b[:, -1] <= 0.0
    if np.any(dead):
        alpha[dead] = 0.0
        snr[dead] = 0.0
        i0[dead] = 0
    return alpha, snr, i0


def solve_no_dl(ch: ChannelRealization, budget: PowerBudget) -> PowerAllocation:
    """Exact SNR-maximizing power control with no direct link.

    The transmitter always uses full power; the relay fractions follow the
    phi ranking described in the module docstring.
    """
    f_mag, g_mag = _magnitudes(ch, budget.relay_count)
    alpha, snr, i0 = solve_no_dl_arrays(f_mag, g_mag, budget.p0, budget.p)
    return PowerAllocation(alpha0=1.0, beta0=0.0, alpha=alpha[0],
                           snr=float(snr[0]), i0=int(i0[0]))


@lru_cache(maxsize=8)
def _grid_levels(step: float) -> np.ndarray:
    levels = np.arange(0.0, 1.0 + 0.5 * step, step)
    if levels[-1] < 1.0 - 1e-12:
        levels = np.append(levels, 1.0)
    levels[-1] = min(levels[-1], 1.0)
    levels.setflags(write=False)
    return levels


@lru_cache(maxsize=8)
def _grid_points(step: float, r_count: int):
    levels = _grid_levels(step)
    mesh = np.meshgrid(*([levels] * r_count), indexing="ij")
    grid = np.stack(mesh, axis=-1).reshape(-1, r_count)
    grid.setflags(write=False)
    # single-precision copies for the scan pass; winners are re-scored in
    # double precision, so the oracle value keeps ~1e-6 relative accuracy
    grid32 = grid.astype(np.float32)
    grid32.setflags(write=False)
    grid_sq32 = grid32 ** 2
    grid_sq32.setflags(write=False)
    return grid, grid32, grid_sq32


def oracle_grid_arrays(f_mag, g_mag, p0, p, step, block=65536):
    """Best grid SNR per row of (N, R) magnitude arrays (verification oracle)."""
    n, r_count = f_mag.shape
    if r_count > 4:
        raise ResourceLimitError("exhaustive grid limited to 4 relays")
    if not 0.0 < step <= 0.5:
        raise ValueError("step must lie in (0, 0.5]")
    if len(_grid_levels(step)) ** r_count > _GRID_POINT_BUDGET:
        raise ResourceLimitError("grid would exceed the point budget")
    grid, grid32, grid_sq32 = _grid_points(step, r_count)
    denom = 1.0 + f_mag ** 2 * p0
    b = f_mag * g_mag * np.sqrt(p) / np.sqrt(denom)
    a2 = g_mag ** 2 * p / denom
    b32 = b.astype(np.float32)
    a2_32 = a2.astype(np.float32)
    best = np.full(n, -1.0)
    best_alpha = np.zeros((n, r_count))
    for lo in range(0, grid.shape[0], block):
        chunk32 = grid32[lo:lo + block]
        # scan pass in float32: snr <- (b G^T)^2 / (1 + a2 (G^2)^T)
        snr = b32 @ chunk32.T
        np.square(snr, out=snr)
        noise = a2_32 @ grid_sq32[lo:lo + block].T
        noise += np.float32(1.0)
        snr /= noise
        k = np.argmax(snr, axis=1)
        # re-score each block winner in float64
        alpha = grid[lo + k]
        sig = np.einsum("ij,ij->i", b, alpha)
        val = p0 * sig ** 2 / (1.0 + np.einsum("ij,ij->i", a2, alpha ** 2))
        better = val > best
        best[better] = val[better]
        best_alpha[better] = alpha[better]
    return best, best_alpha


def oracle_grid(ch: ChannelRealization, budget: PowerBudget, step: float) -> PowerAllocation:
    """Exhaustive search of the fraction box on the grid {0, step, ..., 1}."""
    f_mag, g_mag = _magnitudes(ch, budget.relay_count)
    best, best_alpha = oracle_grid_arrays(f_mag, g_mag, budget.p0, budget.p, step)
    alpha = best_alpha[0]
    return PowerAllocation(alpha0=1.0, beta0=0.0, alpha=alpha,
                           snr=float(best[0]),
                           i0=int(np.sum(alpha >= 1.0 - _BOX_SLACK)))


def best_relay_arrays(f_mag, g_mag, p0, p):
    """Single-relay figure of merit and winner per row of (N, R) arrays."""
    h = p * (f_mag * g_mag) ** 2 / (1.0 + f_mag ** 2 * p0 + g_mag ** 2 * p)
    winner = np.argmax(h, axis=1)  # ties: lowest index
    alpha = np.zeros_like(f_mag)
    np.put_along_axis(alpha, winner[:, None], 1.0, axis=1)
    snr = receive_snr_no_dl_arrays(f_mag, g_mag, p0, p, alpha)
    return winner, alpha, snr


def select_best_relay(ch: ChannelRealization, budget: PowerBudget):
    """Pick the single relay maximizing P|fg|^2 / (1 + |f|^2 P0 + |g|^2 P).

    Returns the 0-based winner index and the corresponding one-hot
    allocation; ties go to the lowest index.
    """
    f_mag, g_mag = _magnitudes(ch, budget.relay_count)
    winner, alpha, snr = best_relay_arrays(f_mag, g_mag, budget.p0, budget.p)
    alloc = PowerAllocation(alpha0=1.0, beta0=0.0, alpha=alpha[0],
                            snr=float(snr[0]), i0=1)
    return int(winner[0]), alloc


def larsson_alloc_arrays(f_mag, g_mag, p0, p_total):
    """Aggregate-power allocation (sum alpha^2 = 1, common relay budget)."""
    num = f_mag * g_mag * np.sqrt(1.0 + f_mag ** 2 * p0) \
        / (f_mag ** 2 * p0 + g_mag ** 2 * p_total + 1.0)
    norm = np.sqrt(np.sum(num ** 2, axis=1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(norm > 0, num / norm, 0.0)
    snr = receive_snr_no_dl_arrays(f_mag, g_mag, p0,
                                   np.full(f_mag.shape[1], p_total), alpha)
    return alpha, snr


def larsson_alloc(ch: ChannelRealization, p0: float, p_total: float) -> PowerAllocation:
    """Comparison scheme: one aggregate power budget shared by all relays.

    Fractions satisfy sum alpha^2 = 1 exactly; each relay's nominal budget in
    the forwarding rule is the full aggregate ``p_total``.
    """
    if p0 <= 0 or p_total <= 0:
        raise ValueError("powers must be > 0")
    f_mag = np.abs(ch.f)[None, :]
    g_mag = np.abs(ch.g)[None, :]
    alpha, snr = larsson_alloc_arrays(f_mag, g_mag, p0, p_total)
    return PowerAllocation(alpha0=1.0, beta0=0.0, alpha=alpha[0],
                           snr=float(snr[0]),
                           i0=int(np.sum(alpha[0] >= 1.0 - _BOX_SLACK)))
