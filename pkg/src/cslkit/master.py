"""Ensemble-level (density matrix) evolution and energy bookkeeping.

The generator integrated here is

    d rho/dt = -i [H, rho] - sum_k (lambda_k / 2) [A_k, [A_k, rho]]

which, in the shared eigenbasis of the ``A_k``, is ``-i[H, rho] - D * rho``
with ``D[n, m] = sum_k (lambda_k / 2) (a_k(n) - a_k(m))**2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .core import (TOLERANCES, CollapseOperatorSet, DensityMatrix, HermitianOperator,
                   StateVector, ValidationError, min_eigenvalue)

log = logging.getLogger(__name__)


class PositivityError(RuntimeError):
    pass


def analytic_density(c, eigenvalues, lam: float, t: float) -> DensityMatrix:
    """Closed-form density matrix with no Hamiltonian.

    ``eigenvalues`` is either one eigenvalue per label or a ``[channel, label]``
    table; entry ``(n, m)`` is ``c_n c_m^* exp(-(lam t / 2) sum_k (a_kn - a_km)^2)``.
    """
    if t < 0:
        raise ValidationError("t must be >= 0")
    c = np.asarray(c, dtype=complex).reshape(-1)
    if abs(np.vdot(c, c).real - 1.0) > 1e-10:
        raise ValidationError("amplitudes must be normalized")
    a = np.atleast_2d(np.asarray(eigenvalues, dtype=float))
    diff2 = ((a[:, :, None] - a[:, None, :]) ** 2).sum(axis=0)
    return DensityMatrix(np.outer(c, c.conj()) * np.exp(-0.5 * lam * t * diff2))


def decoherence_matrix(collapse_ops: CollapseOperatorSet, lam: float) -> np.ndarray:
    a = collapse_ops.eigenvalue_table
    rates = collapse_ops.rates(lam)
    diff2 = (a[:, :, None] - a[:, None, :]) ** 2
    return 0.5 * np.tensordot(rates, diff2, axes=1)


class LindbladGenerator:
    """Precomputed generator; works on raw matrices in the collapse eigenbasis."""

    def __init__(self, hamiltonian: Optional[HermitianOperator], collapse_ops: CollapseOperatorSet,
                 lam: float):
        self.ops = collapse_ops
        self.decay = decoherence_matrix(collapse_ops, lam)
        self.h = None
        if hamiltonian is not None:
            if hamiltonian.dim != collapse_ops.dim:
                raise ValidationError("Hamiltonian and collapse operators differ in dimension")
            self.h = collapse_ops.matrix_to_eigenbasis(hamiltonian.matrix)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = -self.decay * rho
        if self.h is not None:
            out += -1j * (self.h @ rho - rho @ self.h)
        return out

    def rk4(self, rho: np.ndarray, dt: float) -> tuple[np.ndarray, float]:
        """One Runge-Kutta step followed by trace renormalization; returns the drift too."""
        k1 = self(rho)
        k2 = self(rho + 0.5 * dt * k1)
        k3 = self(rho + 0.5 * dt * k2)
        k4 = self(rho + dt * k3)
        new = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        tr = np.trace(new).real
        drift = tr - np.trace(rho).real
        new = 0.5 * (new + new.conj().T) / tr
        return new, drift


def _check_positive(m: np.ndarray):
    lo = min_eigenvalue(m)
    if lo < TOLERANCES.positivity_error:
        raise PositivityError(f"smallest eigenvalue {lo:.3e} below {TOLERANCES.positivity_error}")
    return lo


def lindblad_step(rho: DensityMatrix, hamiltonian: Optional[HermitianOperator],
                  collapse_ops: CollapseOperatorSet, lam: float, dt: float) -> DensityMatrix:
    """Advance ``rho`` by one RK4 step of the collapse master equation."""
    gen = LindbladGenerator(hamiltonian, collapse_ops, lam)
    r = collapse_ops.matrix_to_eigenbasis(rho.matrix)
    new, drift = gen.rk4(r, dt)
    log.debug("trace drift %.3e", drift)
    out = collapse_ops.matrix_from_eigenbasis(new)
    _check_positive(out)
    return DensityMatrix(out)


@dataclass
class DensityPath:
    times: np.ndarray
    matrices: np.ndarray      # (T, N, N) in the computational basis
    max_trace_drift: float = 0.0

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i) -> DensityMatrix:
        return DensityMatrix(self.matrices[i])


def evolve_density(rho0: DensityMatrix, hamiltonian: Optional[HermitianOperator],
                   collapse_ops: CollapseOperatorSet, lam: float, dt: float, steps: int,
                   save_every: int = 1, check_every: int = 100) -> DensityPath:
    """Repeated :func:`lindblad_step`, saving every ``save_every`` steps (including t = 0)."""
    gen = LindbladGenerator(hamiltonian, collapse_ops, lam)
    r = collapse_ops.matrix_to_eigenbasis(rho0.matrix).astype(complex)
    times, mats = [0.0], [rho0.matrix.copy()]
    worst = 0.0
    for i in range(1, steps + 1):
        r, drift = gen.rk4(r, dt)
        worst = max(worst, abs(drift))
        if i % save_every == 0 or i == steps:
            out = collapse_ops.matrix_from_eigenbasis(r)
            if check_every and (i % check_every == 0 or i == steps):
                _check_positive(out)
            if i % save_every == 0:
                times.append(i * dt)
                mats.append(out)
    if worst:
        log.debug("max trace drift per step %.3e", worst)
    return DensityPath(np.array(times), np.array(mats), worst)


def double_commutator_rate(rho: np.ndarray, hamiltonian: HermitianOperator,
                           collapse_ops: CollapseOperatorSet, lam: float) -> float:
    """``sum_k (lambda_k / 2) Tr{rho [A_k, [A_k, H]]}`` evaluated in the eigenbasis.

    This is the rate of change of the noise-field energy; the matter energy
    changes at minus this rate.
    """
    d = decoherence_matrix(collapse_ops, lam)
    r = collapse_ops.matrix_to_eigenbasis(rho)
    h = collapse_ops.matrix_to_eigenbasis(hamiltonian.matrix)
    # Tr(rho [A,[A,H]]) = sum_nm rho_mn (a_n - a_m)^2 H_nm
    return float(np.sum(r.T * d * h).real)


@dataclass
class EnergyLedger:
    times: np.ndarray
    matter_energy: np.ndarray
    noise_energy: np.ndarray
    interaction_energy: np.ndarray
    noise_energy_integrated: np.ndarray
    noise_rate: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.matter_energy + self.noise_energy + self.interaction_energy

    @property
    def total_integrated(self) -> np.ndarray:
        return self.matter_energy + self.noise_energy_integrated + self.interaction_energy

    def conservation_error(self) -> float:
        """Largest relative deviation of matter + integrated noise energy from its start."""
        ref = abs(self.matter_energy[0]) or 1.0
        return float(np.max(np.abs(self.total_integrated - self.matter_energy[0])) / ref)


def mean_energies(rho_path: DensityPath, hamiltonian: HermitianOperator,
                  collapse_ops: CollapseOperatorSet, lam: float) -> EnergyLedger:
    times = np.asarray(rho_path.times, dtype=float)
    mats = np.asarray(rho_path.matrices)
    if len(times) != len(mats):
        raise ValidationError("times and density matrices differ in length")
    if len(times) > 2:
        steps = np.diff(times)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
            raise ValidationError("density path must be on a uniform time grid")
    h = hamiltonian.matrix
    matter = np.einsum("tij,ji->t", mats, h).real
    rate = np.array([double_commutator_rate(m, hamiltonian, collapse_ops, lam) for m in mats])
    noise = -(matter - matter[0])
    if len(times) > 2:
        integrated = cumulative_simpson(rate, x=times, initial=0.0)
    elif len(times) == 2:
        integrated = np.array([0.0, 0.5 * (rate[0] + rate[1]) * (times[1] - times[0])])
    else:
        integrated = np.zeros(1)
    return EnergyLedger(times, matter, noise, np.zeros_like(matter), integrated, rate)


@dataclass
class EnergySpectrum:
    energies: np.ndarray
    density: np.ndarray
    cutoff: float
    center: float
    skipped: list = field(default_factory=list)

    def moments(self) -> dict:
        """Normalization (with E^-2 tail extrapolation), symmetric-cutoff mean and
        second moment about zero."""
        e, p = self.energies, self.density
        ok = np.isfinite(p)
        e, p = e[ok], p[ok]
        grid_norm = simpson(p, x=e)
        x_left = self.center - e[0]
        x_right = e[-1] - self.center
        # c / E^2 tails integrate to c / X beyond the grid edge
        tail = p[0] * x_left + p[-1] * x_right
        return {
            "grid_integral": float(grid_norm),
            "normalization": float(grid_norm + tail),
            "mean": float(simpson(e * p, x=e)),
            "second_moment": float(simpson(e * e * p, x=e)),
            "cutoff": self.cutoff,
            "center": self.center,
        }


def energy_grid(hamiltonian: HermitianOperator, cutoff: float, points: int,
                center: Optional[float] = None) -> np.ndarray:
    """Uniform grid of half-width ``cutoff`` about the centre of the spectrum of ``hamiltonian``."""
    if center is None:
        ev = np.linalg.eigvalsh(hamiltonian.matrix)
        center = 0.5 * (ev[0] + ev[-1])
    return np.linspace(center - cutoff, center + cutoff, points)


def energy_distribution(psi0: StateVector, hamiltonian: HermitianOperator,
                        collapse_ops: CollapseOperatorSet, lam: float,
                        energies: Sequence[float], block: int = 4096) -> EnergySpectrum:
    """Energy distribution ``(1/pi) <x|Gamma|x>`` with ``x = (E - H - i Gamma)^-1 psi0``
    and ``Gamma = sum_k (lambda_k / 2) A_k^2``."""
    psi = psi0.normalized().amplitudes
    if psi.size != hamiltonian.dim or hamiltonian.dim != collapse_ops.dim:
        raise ValidationError("dimension mismatch")
    e = np.asarray(energies, dtype=float)
    if e.ndim != 1 or e.size < 3:
        raise ValidationError("energy grid needs at least 3 points")
    u = collapse_ops.eigenbasis
    gdiag = 0.5 * (collapse_ops.rates(lam) @ collapse_ops.eigenvalue_table ** 2)
    gamma = (u * gdiag) @ u.conj().T
    n = psi.size
    base = -hamiltonian.matrix - 1j * gamma
    dens = np.full(e.size, np.nan)
    skipped = []
    eye = np.eye(n)
    for start in range(0, e.size, block):
        chunk = e[start:start + block]
        mats = chunk[:, None, None] * eye + base
        try:
            x = np.linalg.solve(mats, np.broadcast_to(psi, (chunk.size, n))[..., None])[..., 0]
            dens[start:start + chunk.size] = np.einsum("gi,ij,gj->g", x.conj(), gamma, x).real / np.pi
        except np.linalg.LinAlgError:
            for j, ej in enumerate(chunk):
                try:
                    xj = np.linalg.solve(ej * eye + base, psi)
                    dens[start + j] = np.vdot(xj, gamma @ xj).real / np.pi
                except np.linalg.LinAlgError:
                    skipped.append(float(ej))
    if skipped:
        log.warning("%d singular grid points skipped", len(skipped))
    center = 0.5 * (e[0] + e[-1])
    return EnergySpectrum(e, np.maximum(dens, 0.0, where=np.isfinite(dens), out=dens),
                          0.5 * (e[-1] - e[0]), center, skipped)
