"""Smeared mass-density collapse operators on a spatial lattice.

Site ``j`` carries the operator

    A(x_j) = sum_p (m_p / m0) (pi a^2)^(-d/4) exp(-|x_j - z_p|^2 / (2 a^2))

which is diagonal in the position basis. Each channel has quadrature weight
``spacing**d`` so that sums over sites approximate the continuum integral
over ``x``; the per-channel collapse rate is ``lambda * spacing**d``.

Boundaries are open. Sites are centred on the origin.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import CollapseOperatorSet, HermitianOperator, ModelParams, StateVector, ValidationError

MAX_DIM = 4096


class BoundaryWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    dimension: int
    extent: int
    spacing: float
    particle_masses: tuple = (1.0,)

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValidationError("dimension must be 1, 2 or 3")
        if self.extent < 2:
            raise ValidationError("extent must be >= 2")
        if not self.spacing > 0:
            raise ValidationError("spacing must be > 0")
        masses = tuple(float(m) for m in self.particle_masses)
        if not masses or any(m <= 0 for m in masses):
            raise ValidationError("particle masses must be positive")
        if len(masses) > 2:
            raise ValidationError("at most two particles are supported")
        object.__setattr__(self, "particle_masses", masses)

    @property
    def n_sites(self) -> int:
        return self.extent ** self.dimension

    @property
    def n_particles(self) -> int:
        return len(self.particle_masses)

    @property
    def hilbert_dim(self) -> int:
        return self.n_sites ** self.n_particles

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dimension

    @property
    def half_width(self) -> float:
        return 0.5 * (self.extent - 1) * self.spacing

    def axis(self) -> np.ndarray:
        return (np.arange(self.extent) - 0.5 * (self.extent - 1)) * self.spacing

    def sites(self) -> np.ndarray:
        """Site coordinates, shape (n_sites, dimension), C order."""
        grids = np.meshgrid(*([self.axis()] * self.dimension), indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    def configurations(self) -> list:
        """Basis labels: one site-index tuple per particle configuration."""
        return list(itertools.product(range(self.n_sites), repeat=self.n_particles))


def _kernel(x: np.ndarray, z: np.ndarray, a: float, d: int) -> np.ndarray:
    """Smearing function values ``G(x_j - z)`` for sites ``x`` (S, d) and points ``z`` (P, d)."""
    r2 = ((x[:, None, :] - z[None, :, :]) ** 2).sum(axis=-1)
    return (math.pi * a * a) ** (-d / 4.0) * np.exp(-r2 / (2.0 * a * a))


def build_position_collapse_ops(lattice: LatticeSpec, params: ModelParams,
                                max_dim: int = MAX_DIM) -> CollapseOperatorSet:
    if lattice.hilbert_dim > max_dim:
        raise ValidationError(
            f"Hilbert space dimension {lattice.hilbert_dim} exceeds cap {max_dim}")
    if lattice.extent * lattice.spacing < 4 * params.a:
        warnings.warn("lattice span is below 4a; smeared densities will be truncated",
                      BoundaryWarning, stacklevel=2)
    x = lattice.sites()
    g = _kernel(x, x, params.a, lattice.dimension)   # g[j, s]: channel j, particle at site s
    ratios = [m / params.m0 for m in lattice.particle_masses]
    if lattice.n_particles == 1:
        table = ratios[0] * g
    else:
        n = lattice.n_sites
        table = (ratios[0] * g[:, :, None] + ratios[1] * g[:, None, :]).reshape(n, n * n)
    measure = np.full(lattice.n_sites, lattice.cell_volume)
    return CollapseOperatorSet.from_diagonals(table, measure, tuple(lattice.configurations()))


def pair_decay_rate(lattice: LatticeSpec, params: ModelParams, separation: float,
                    mass: Optional[float] = None) -> float:
    """Decay rate of the coherence between two position states ``separation`` apart.

    The two positions sit symmetrically about the lattice centre along the
    first axis; the rate is ``(lambda/2) sum_j dV (A_j(z) - A_j(z'))^2``.
    """
    if separation < 0 or separation > 2 * lattice.half_width:
        raise ValidationError("separation must lie within the lattice span")
    m = lattice.particle_masses[0] if mass is None else mass
    z = np.zeros((2, lattice.dimension))
    z[0, 0], z[1, 0] = -0.5 * separation, 0.5 * separation
    if lattice.half_width - 0.5 * separation < 2 * params.a:
        warnings.warn("packets lie within 2a of the lattice edge", BoundaryWarning, stacklevel=2)
    g = (m / params.m0) * _kernel(lattice.sites(), z, params.a, lattice.dimension)
    return 0.5 * params.lam * lattice.cell_volume * float(np.sum((g[:, 0] - g[:, 1]) ** 2))


def saturated_pair_rate(lattice: LatticeSpec, params: ModelParams, mass: Optional[float] = None) -> float:
    """Large-separation limit ``lambda (m/m0)^2 sum_j dV G_j^2`` for a packet at the centre."""
    m = lattice.particle_masses[0] if mass is None else mass
    g = _kernel(lattice.sites(), np.zeros((1, lattice.dimension)), params.a, lattice.dimension)[:, 0]
    return params.lam * (m / params.m0) ** 2 * lattice.cell_volume * float(np.sum(g * g))


def hopping_hamiltonian(lattice: LatticeSpec, hbar: float = 1.0,
                        potential: Optional[Sequence[float]] = None) -> HermitianOperator:
    """Nearest-neighbour kinetic energy, divided by ``hbar`` (an angular frequency).

    Each particle of mass ``m`` hops with ``J = hbar / (2 m spacing^2)`` and
    has on-site term ``2 d J``; open boundaries. ``potential`` (same units)
    is added on the diagonal.
    """
    n1 = lattice.extent
    lap1 = np.diag(np.full(n1, 2.0)) - np.eye(n1, k=1) - np.eye(n1, k=-1)
    eye1 = np.eye(n1)
    lap = np.zeros((lattice.n_sites, lattice.n_sites))
    for axis in range(lattice.dimension):
        term = np.ones((1, 1))
        for other in range(lattice.dimension):
            term = np.kron(term, lap1 if other == axis else eye1)
        lap += term
    ns = lattice.n_sites
    h = np.zeros((lattice.hilbert_dim, lattice.hilbert_dim))
    for p, m in enumerate(lattice.particle_masses):
        hop = hbar / (2.0 * m * lattice.spacing ** 2)
        single = hop * lap
        if lattice.n_particles == 1:
            h += single
        elif p == 0:
            h += np.kron(single, np.eye(ns))
        else:
            h += np.kron(np.eye(ns), single)
    if potential is not None:
        h += np.diag(np.asarray(potential, dtype=float))
    return HermitianOperator(h)


def gaussian_packet(lattice: LatticeSpec, center: Sequence[float], width: float,
                    momentum: Sequence[float] | float = 0.0) -> StateVector:
    """Single-particle Gaussian wave packet ``exp(-|x-c|^2/(4 width^2) + i k.x)``."""
    if lattice.n_particles != 1:
        raise ValidationError("gaussian_packet builds single-particle states")
    x = lattice.sites()
    c = np.broadcast_to(np.asarray(center, dtype=float), (lattice.dimension,))
    k = np.broadcast_to(np.asarray(momentum, dtype=float), (lattice.dimension,))
    amp = np.exp(-((x - c) ** 2).sum(axis=1) / (4.0 * width * width) + 1j * (x @ k))
    return StateVector(amp, tuple(lattice.configurations())).normalized()


def continuum_heating_rate(params: ModelParams, mass: float, hbar: float = 1.0,
                           dimensions: int = 1) -> float:
    """Continuum energy gain rate ``d * lambda (m/m0)^2 hbar^2 / (4 m a^2)``, divided by ``hbar``
    to match :func:`hopping_hamiltonian` units."""
    alpha = mass / params.m0
    return dimensions * params.lam * alpha ** 2 * hbar / (4.0 * mass * params.a ** 2)
