"""Fading and path-loss channel generation over simple relay-network geometries.

Every sampler is a pure function of an explicit :class:`RngSeed`, so draws are
reproducible across runs and independent of worker scheduling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TopologyKind",
    "Topology",
    "ChannelRealization",
    "RelayPlacement",
    "RngSeed",
    "sample_rayleigh",
    "path_loss_amplitude",
    "sample_disk_placement",
    "realize",
    "realize_block",
]


class TopologyKind(enum.Enum):
    """Supported network layouts."""

    UNIT_VARIANCE = "unit_variance"  # pure Rayleigh fading, no geometry
    TRIANGLE = "triangle"            # equilateral: every link has the same length
    LINE = "line"                    # relays at the midpoint of the Tx-Rx segment
    RANDOM_DISK = "random_disk"      # relays uniform in a disk around the midpoint


_DEFAULT_DISTANCE = {
    TopologyKind.UNIT_VARIANCE: 2.0,
    TopologyKind.TRIANGLE: 1.0,
    TopologyKind.LINE: 2.0,
    TopologyKind.RANDOM_DISK: 2.0,
}


@dataclass(frozen=True)
class Topology:
    """Node geometry plus a path-loss exponent.

    ``tx_rx_distance`` defaults to 1 for the triangle layout (unit edges) and
    2 for the line and random-disk layouts.  ``disk_radius`` is measured in
    units of half the Tx-Rx separation and must lie in (0, 1) so the relay
    stays closer to each end node than the end nodes are to each other.
    """

    kind: TopologyKind
    relay_count: int
    tx_rx_distance: float | None = None
    disk_radius: float | None = None
    path_loss_exponent: float = 2.0

    def __post_init__(self):
        if self.relay_count < 1:
            raise ValueError("relay_count must be >= 1")
        if self.path_loss_exponent < 0:
            raise ValueError("path_loss_exponent must be >= 0")
        if self.tx_rx_distance is not None and self.tx_rx_distance <= 0:
            raise ValueError("tx_rx_distance must be > 0")
        if self.kind is TopologyKind.RANDOM_DISK:
            if self.disk_radius is None or not 0.0 < self.disk_radius < 1.0:
                raise ValueError("random-disk layout needs disk_radius in (0, 1)")

    @property
    def distance(self) -> float:
        """Tx-Rx separation, falling back to the layout default."""
        if self.tx_rx_distance is not None:
            return float(self.tx_rx_distance)
        return _DEFAULT_DISTANCE[self.kind]


@dataclass(frozen=True)
class ChannelRealization:
    """Complex link gains for one coherence block.

    ``f`` holds transmitter-to-relay gains, ``g`` relay-to-receiver gains,
    ``f0`` the direct transmitter-to-receiver gain when that link exists.
    """

    f: np.ndarray
    g: np.ndarray
    f0: complex | None = None

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.f, dtype=complex))
        g = np.atleast_1d(np.asarray(self.g, dtype=complex))
        if f.shape != g.shape or f.ndim != 1:
            raise ValueError("f and g must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise ValueError("channel gains must be finite")
        if self.f0 is not None and not np.isfinite(self.f0):
            raise ValueError("direct-link gain must be finite")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @property
    def relay_count(self) -> int:
        return self.f.shape[0]


@dataclass(frozen=True)
class RelayPlacement:
    """Relay position inside the random disk, in units of half the Tx-Rx span."""

    rho: float    # distance from the midpoint
    theta: float  # angle against the Tx-Rx axis, in [0, pi)
    d_tx: float   # distance to the transmitter (same units)
    d_rx: float   # distance to the receiver


@dataclass(frozen=True)
class RngSeed:
    """Base seed plus a sub-stream index.

    Identical (seed, stream) pairs always reproduce identical sample
    sequences; distinct streams are statistically independent.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if not 0 <= self.stream < 2 ** 64:
            raise ValueError("stream must fit in 64 unsigned bits")

    def generator(self, *extra: int) -> np.random.Generator:
        """Fresh generator for this seed/stream plus optional sub-indices."""
        return np.random.default_rng([self.seed, self.stream, *extra])


def _complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian, zero mean, unit variance."""
    re = gen.standard_normal(shape)
    im = gen.standard_normal(shape)
    return np.sqrt(0.5) * (re + 1j * im)


def sample_rayleigh(realization_count: int, relay_count: int, with_dl: bool, rng: RngSeed):
    """Yield i.i.d. unit-variance Rayleigh-fading realizations.

    Each gain has independent real/imaginary parts ~ Normal(0, 1/2); the
    direct-link gain is present iff ``with_dl``.
    """
    if relay_count < 1:
        raise ValueError("relay_count must be >= 1")
    if realization_count < 0:
        raise ValueError("realization_count must be >= 0")
    gen = rng.generator()
    for _ in range(realization_count):
        f = _complex_normal(gen, relay_count)
        g = _complex_normal(gen, relay_count)
        f0 = complex(_complex_normal(gen, ())) if with_dl else None
        yield ChannelRealization(f=f, g=g, f0=f0)


def path_loss_amplitude(distance, exponent: float):
    """Amplitude scaling so the channel power falls off as distance**(-exponent)."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be > 0")
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    out = d ** (-exponent / 2.0)
    return float(out) if out.ndim == 0 else out


def _disk_block(gen: np.random.Generator, shape, radius: float):
    """Vectorized relay placements: rho = radius * sqrt(U), theta uniform [0, pi)."""
    if not 0.0 < radius < 1.0:
        raise ValueError("disk radius must lie in (0, 1)")
    x = gen.random(shape)
    theta = gen.random(shape) * np.pi
    rho = radius * np.sqrt(x)
    d_tx = np.sqrt(1.0 + rho ** 2 - 2.0 * rho * np.cos(theta))
    d_rx = np.sqrt(1.0 + rho ** 2 + 2.0 * rho * np.cos(theta))
    return rho, theta, d_tx, d_rx


def sample_disk_placement(r: float, rng: RngSeed) -> RelayPlacement:
    """Draw one uniform placement inside the disk of radius ``r``."""
    gen = rng.generator()
    rho, theta, d_tx, d_rx = _disk_block(gen, (), r)
    return RelayPlacement(rho=float(rho), theta=float(theta),
                          d_tx=float(d_tx), d_rx=float(d_rx))


def _link_scales(topology: Topology, gen: np.random.Generator, n: int):
    """Per-link amplitude scalings (tx-relay, relay-rx, direct) for n blocks.

    Random-disk placements are drawn here, before any fading, so the draw
    order inside a block is fixed: placements, f, g, f0.
    """
    kind = topology.kind
    r_count = topology.relay_count
    eps = topology.path_loss_exponent
    dist = topology.distance
    if kind is TopologyKind.UNIT_VARIANCE:
        one = np.ones((n, r_count))
        return one, one.copy(), np.ones(n)
    if kind is TopologyKind.TRIANGLE:
        s_relay = np.full((n, r_count), path_loss_amplitude(dist, eps))
        s_dl = np.full(n, path_loss_amplitude(dist, eps))
        return s_relay, s_relay.copy(), s_dl
    if kind is TopologyKind.LINE:
        s_relay = np.full((n, r_count), path_loss_amplitude(dist / 2.0, eps))
        s_dl = np.full(n, path_loss_amplitude(dist, eps))
        return s_relay, s_relay.copy(), s_dl
    # random disk: geometry in units of half the Tx-Rx span, scaled back up
    half = dist / 2.0
    _, _, d_tx, d_rx = _disk_block(gen, (n, r_count), topology.disk_radius)
    s_tx = path_loss_amplitude(d_tx * half, eps)
    s_rx = path_loss_amplitude(d_rx * half, eps)
    s_dl = np.full(n, path_loss_amplitude(dist, eps))
    return s_tx, s_rx, s_dl


def realize_block(topology: Topology, gen: np.random.Generator, n: int, with_dl: bool):
    """n channel realizations as arrays: f (n, R), g (n, R), f0 (n,) or None."""
    s_tx, s_rx, s_dl = _link_scales(topology, gen, n)
    r_count = topology.relay_count
    f = s_tx * _complex_normal(gen, (n, r_count))
    g = s_rx * _complex_normal(gen, (n, r_count))
    f0 = s_dl * _complex_normal(gen, n) if with_dl else None
    return f, g, f0


def realize(topology: Topology, rng: RngSeed, with_dl: bool = True) -> ChannelRealization:
    """Draw one realization: path-loss amplitude times a unit Rayleigh sample."""
    gen = rng.generator()
    f, g, f0 = realize_block(topology, gen, 1, with_dl)
    return ChannelRealization(f=f[0], g=g[0],
                              f0=complex(f0[0]) if f0 is not None else None)
