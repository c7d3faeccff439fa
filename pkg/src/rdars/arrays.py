"""Steering vectors, connected-element mode selection, LoS channels, and
per-UE effective channel rows."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .scenario import Geometry, SystemConfig


def steering(n: int, u: float, d: float, lam: float) -> np.ndarray:
    """Steering vector of an n-element uniform line array.

    Entry m (1-based) is exp(1j * 2*pi * u * (m-1) * d / lam); the first
    entry is exactly 1.
    """
    if n < 1:
        raise ValueError("array size must be at least 1")
    return np.exp(1j * (2.0 * np.pi * d / lam) * u * np.arange(n))


@dataclass(frozen=True)
class ModeSelection:
    """Uniform sparse placement of the connected elements.

    ``index_set`` holds the 1-based element indices m0 + m*eta for
    m = 0..a-1; everything else reflects.
    """

    n_elems: int
    eta: int
    m0: int
    index_set: np.ndarray

    @property
    def n_connected(self) -> int:
        return self.index_set.size

    @property
    def index0(self) -> np.ndarray:
        """Zero-based positions of the connected elements."""
        return self.index_set - 1

    @cached_property
    def a_vec(self) -> np.ndarray:
        """Length-N binary vector, 1 at connected elements."""
        v = np.zeros(self.n_elems)
        v[self.index0] = 1.0
        v.flags.writeable = False
        return v

    @property
    def selection_matrix(self) -> np.ndarray:
        """The N x N diagonal binary mode matrix."""
        return np.diag(self.a_vec)

    @property
    def column_selector(self) -> np.ndarray:
        """N x a matrix whose m-th column has a single 1 at index_set[m]."""
        mat = np.zeros((self.n_elems, self.n_connected))
        mat[self.index0, np.arange(self.n_connected)] = 1.0
        return mat


def make_mode(n: int, a: int, eta: int, m0: int = 1) -> ModeSelection:
    """Build the connected-element index set {m0 + m*eta : m = 0..a-1}."""
    if n < 1 or not 1 <= a <= n:
        raise ValueError(f"need 1 <= a <= n, got a={a}, n={n}")
    if eta < 1 or m0 < 1:
        raise ValueError("eta and m0 must be positive integers")
    last = m0 + (a - 1) * eta
    if last > n:
        raise ValueError(
            f"sparsity eta={eta} infeasible: last connected index {last} > n={n}"
        )
    idx = m0 + eta * np.arange(a)
    idx.flags.writeable = False
    return ModeSelection(n_elems=n, eta=eta, m0=m0, index_set=idx)


def feasible_sparsities(n: int, a: int) -> list[int]:
    """All sparsity levels that fit a connected elements in an n-element
    aperture: {1, ..., floor((n-1)/(a-1))}, and {1} when a == 1."""
    if a > n:
        raise ValueError(f"cannot connect a={a} of n={n} elements")
    if a < 1:
        raise ValueError("a must be at least 1")
    if a == 1:
        return [1]
    return list(range(1, (n - 1) // (a - 1) + 1))


def sparse_steering(n: int, u: float, d: float, lam: float,
                    mode: ModeSelection) -> np.ndarray:
    """Steering vector masked to the connected elements (zeros elsewhere)."""
    if mode.n_elems != n:
        raise ValueError(f"mode built for N={mode.n_elems}, not {n}")
    out = np.zeros(n, dtype=complex)
    out[mode.index0] = steering(n, u, d, lam)[mode.index0]
    return out


@dataclass(frozen=True)
class ChannelSet:
    """Raw propagation channels: BS-to-surface matrix G (N x N_t) and the
    surface-to-UE vectors stacked as rows of h_r (K x N)."""

    G: np.ndarray
    h_r: np.ndarray

    @property
    def n_ues(self) -> int:
        return self.h_r.shape[0]

    @property
    def n_elems(self) -> int:
        return self.G.shape[0]


def los_channels(geometry: Geometry, config: SystemConfig) -> ChannelSet:
    """Line-of-sight channels: G is the rank-one steering outer product,
    h_r[k] the scaled surface steering vector toward UE k."""
    n, nt = config.n_elems, config.n_tx
    d, lam = config.spacing, config.wavelength
    b_aoa = steering(n, geometry.u_br_aoa, d, lam)
    b_aod = steering(nt, geometry.u_br_aod, d, lam)
    G = geometry.kappa_br * np.outer(b_aoa, b_aod.conj())
    h_r = np.array([
        kr * steering(n, float(u), d, lam)
        for kr, u in zip(geometry.kappa_ru, geometry.u_ru_aod)
    ])
    return ChannelSet(G=G, h_r=h_r)


@dataclass(frozen=True)
class PassiveBeam:
    """Unit-modulus reflection coefficients, one per surface element.

    ``phi[n]`` is the diagonal entry of the reflection matrix, i.e. the
    phase factor e^{j phi_n} applied to the n-th reflected path.
    """

    phi: np.ndarray

    def __post_init__(self):
        mags = np.abs(self.phi)
        if self.phi.ndim != 1:
            raise ValueError("phi must be a vector")
        if np.any(np.abs(mags - 1.0) > 1e-12):
            worst = float(np.max(np.abs(mags - 1.0)))
            raise ValueError(f"phi entries must be unit modulus (worst |.|-1 = {worst:g})")

    @classmethod
    def uniform(cls, n: int) -> "PassiveBeam":
        return cls(np.ones(n, dtype=complex))

    @classmethod
    def from_phases(cls, angles) -> "PassiveBeam":
        return cls(np.exp(1j * np.asarray(angles, dtype=float)))


def effective_channel(channels: ChannelSet, passive: PassiveBeam,
                      mode: ModeSelection, k: int) -> np.ndarray:
    """Effective downlink row for UE k: the reflected path through G on the
    left (N_t entries) and the direct connected-element part on the right
    (a entries)."""
    if not 0 <= k < channels.n_ues:
        raise IndexError(f"UE index {k} out of range for K={channels.n_ues}")
    return effective_matrix(channels, passive, mode)[k]


def effective_matrix(channels: ChannelSet, passive: PassiveBeam,
                     mode: ModeSelection) -> np.ndarray:
    """All K effective rows stacked: [conj(h_r) * phi * (1-a_vec)] @ G on
    the left, conj(h_r) at the connected indices on the right."""
    if channels.n_elems != mode.n_elems or passive.phi.size != mode.n_elems:
        raise ValueError("channel, passive-beam and mode sizes disagree")
    hc = channels.h_r.conj()
    reflect = (hc * passive.phi * (1.0 - mode.a_vec)) @ channels.G
    direct = hc[:, mode.index0]
    return np.hstack([reflect, direct])
