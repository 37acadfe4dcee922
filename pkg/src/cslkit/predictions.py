"""Closed-form CGS calculators for experimental predictions of the collapse model.

Every function is pure. ``hbar`` is a keyword argument only so the formulas
can be re-evaluated in other unit systems; callers normally leave it alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import constants
from .core import ModelParams, ValidationError


@dataclass(frozen=True)
class Species:
    alpha: float
    count: float
    mass: float


@dataclass(frozen=True)
class SpeciesCensus:
    entries: tuple

    def __post_init__(self):
        entries = tuple(e if isinstance(e, Species) else Species(*e) for e in self.entries)
        for e in entries:
            if e.count < 0 or e.mass <= 0:
                raise ValidationError("counts must be >= 0 and masses > 0")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def single(cls, mass: float, alpha: float = 1.0, count: float = 1.0) -> "SpeciesCensus":
        return cls(((alpha, count, mass),))


def energy_gain_rate(census: SpeciesCensus, params: ModelParams, duration: float = 0.0,
                     hbar: float = constants.HBAR) -> tuple[float, float]:
    """Mean heating rate ``sum_k 3 lambda alpha_k^2 n_k hbar^2 / (4 m_k a^2)`` (erg/s)
    and the energy accumulated over ``duration`` seconds."""
    rate = sum(3.0 * params.lam * e.alpha ** 2 * e.count * hbar ** 2 / (4.0 * e.mass * params.a ** 2)
               for e in census.entries)
    return rate, rate * duration


def fractional_energy_gain(mass: float, params: ModelParams, years: float,
                           alpha: float = 1.0) -> float:
    """Energy gained by one particle over ``years``, in units of its rest energy."""
    _, energy = energy_gain_rate(SpeciesCensus.single(mass, alpha), params, years * constants.YEAR)
    return energy / (mass * constants.C_LIGHT ** 2)


def excitation_rate(params: ModelParams, matrix_element: float) -> float:
    """Transition rate ``(lambda / 2 a^2) |<f| sum alpha r |0>|^2`` (1/s); matrix element in cm."""
    return params.lam / (2.0 * params.a ** 2) * abs(matrix_element) ** 2


def _second_derivative(n: int, h: float) -> np.ndarray:
    return (np.diag(np.full(n, -2.0)) + np.eye(n, k=1) + np.eye(n, k=-1)) / (h * h)


def com_vanishing_demo(masses: Sequence[float] = (1.0, 3.0), alphas: Sequence[float] = (1.0, 1.0),
                       points: int = 24, box: float = 8.0, omega_rel: float = 1.0,
                       omega_cm: float = 2.7, hbar: float = 1.0) -> float:
    """Dipole matrix element ``|<f| alpha_1 x_1 + alpha_2 x_2 |0>|`` for a toy 1-D bound pair.

    The pair Hamiltonian is built on a (centre-of-mass, relative) grid with a
    harmonic binding ``mu omega_rel^2 r^2 / 2`` and a stiffer centre-of-mass
    trap, then diagonalized densely. ``|0>`` is the ground state and ``|f>``
    the first internal excitation, both in the centre-of-mass ground state
    (centre-of-mass mean 0). Natural units.
    """
    if omega_cm <= omega_rel:
        raise ValidationError("omega_cm must exceed omega_rel so the first excitation is internal")
    m1, m2 = (float(m) for m in masses)
    a1, a2 = (float(a) for a in alphas)
    total = m1 + m2
    mu = m1 * m2 / total
    grid = np.linspace(-box / 2, box / 2, points)
    h = grid[1] - grid[0]
    eye = np.eye(points)
    kin = _second_derivative(points, h)
    h_cm = -hbar ** 2 / (2 * total) * kin + np.diag(0.5 * total * omega_cm ** 2 * grid ** 2)
    h_rel = -hbar ** 2 / (2 * mu) * kin + np.diag(0.5 * mu * omega_rel ** 2 * grid ** 2)
    ham = np.kron(h_cm, eye) + np.kron(eye, h_rel)
    vals, vecs = np.linalg.eigh(ham)
    ground, excited = vecs[:, 0], vecs[:, 1]
    big_x = np.repeat(grid, points)      # centre of mass on the outer index
    r = np.tile(grid, points)            # relative coordinate on the inner index
    x1 = big_x + (m2 / total) * r
    x2 = big_x - (m1 / total) * r
    dipole = a1 * x1 + a2 * x2
    return float(abs(excited @ (dipole * ground)))


@dataclass(frozen=True)
class InterferenceBound:
    decay_exponent_per_lambda: float
    lambda_max: float
    inverse_lambda_min: float


def interference_decay_bound(time_of_flight: float, nucleon_count: float,
                             contrast_accuracy: float) -> InterferenceBound:
    """Bound on lambda from interference of an ``n``-nucleon molecule.

    The coherence decays as ``exp(-lambda t n^2)``; agreement with standard
    quantum theory to ``contrast_accuracy`` gives ``lambda < accuracy / (t n^2)``.
    """
    if min(time_of_flight, nucleon_count, contrast_accuracy) <= 0:
        raise ValidationError("inputs must be positive")
    exponent = time_of_flight * nucleon_count ** 2
    lam_max = contrast_accuracy / exponent
    return InterferenceBound(exponent, lam_max, 1.0 / lam_max)


def sphere_collapse_rate(lam: float, nucleons_in_a3: float, nucleons_total: float,
                         elapsed: float) -> tuple[float, float]:
    """Collapse rate ``lambda * n_a3 * n_total`` and the tail exponent ``R t``."""
    if min(lam, nucleons_in_a3, nucleons_total, elapsed) < 0:
        raise ValidationError("inputs must be non-negative")
    rate = lam * nucleons_in_a3 * nucleons_total
    return rate, rate * elapsed


@dataclass(frozen=True)
class DiscSpec:
    radius: float = 2e-5
    thickness: float = 0.5e-5
    density: float = 9.0
    form_factor: float = 1.0
    amplification: Optional[float] = None  # None -> (m / m0)^2

    def __post_init__(self):
        for name in ("radius", "thickness", "density", "form_factor"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.amplification is not None and not self.amplification > 0:
            raise ValidationError("amplification must be positive")

    @property
    def mass(self) -> float:
        return math.pi * self.radius ** 2 * self.thickness * self.density


@dataclass(frozen=True)
class DiscDiffusion:
    mass: float
    amplification: float
    delta_theta_csl: float
    delta_theta_qm: float
    time_to_2pi: float

    @property
    def ratio(self) -> float:
        return self.delta_theta_csl / self.delta_theta_qm


def disc_diffusion(disc: DiscSpec, params: ModelParams, t: float,
                   hbar: float = constants.HBAR) -> DiscDiffusion:
    """RMS rotational diffusion of a small disc after ``t`` seconds.

    ``dTheta_CSL = (hbar / m a^2) sqrt(lambda_eff f t^3 / 12)`` with
    ``lambda_eff = lambda * amplification``; the bare rate does not give the
    quoted 2 pi diffusion time, so the amplification defaults to ``(m/m0)^2``.
    ``dTheta_QM = 8 hbar t / (pi m R^2)``.
    """
    if not t > 0:
        raise ValidationError("t must be positive")
    m = disc.mass
    amp = (m / params.m0) ** 2 if disc.amplification is None else disc.amplification
    lam_eff = params.lam * amp
    pref = hbar / (m * params.a ** 2)
    csl = pref * math.sqrt(lam_eff * disc.form_factor * t ** 3 / 12.0)
    qm = 8.0 * hbar * t / (math.pi * m * disc.radius ** 2)
    t2pi = (12.0 * (2.0 * math.pi / pref) ** 2 / (lam_eff * disc.form_factor)) ** (1.0 / 3.0)
    return DiscDiffusion(m, amp, csl, qm, t2pi)
