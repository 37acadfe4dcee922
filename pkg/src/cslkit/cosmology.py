"""Particle creation by collapse in a toy field theory, and the FRW budget.

Toy model: a free scalar field of mass ``m`` with a linear source ``g``,
collapsing on the number density with rate ``lambda``. Starting from the
vacuum, the means over the observation volume are closed-form:

    N(t) = g^2 V1 / D * {lambda t - 2 [cos(theta) - exp(-lambda t/2) cos(theta + m t)]}
    Q(t) = -g m V1 / D * {1 - exp(-lambda t/2) [cos(m t) + (lambda/2m) sin(m t)]}

with ``D = m^2 + (lambda/2)^2`` and ``theta = 2 arctan(2m/lambda)``. The
matter energy is ``m N + 2 g Q``; the noise field carries the opposite.

FRW: homogeneous expansion with pressureless matter and noise-field energy
(both diluting as ``R^-3``), a cosmological constant, and curvature;
radiation is neglected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .core import ValidationError


@dataclass(frozen=True)
class ToyCreationParams:
    g: float
    m: float
    V1: float = 1.0
    lambda0: float = 0.0
    m0: Optional[float] = None   # None -> m, so lambda0 is the effective rate

    def __post_init__(self):
        if not self.m > 0 or not self.V1 > 0:
            raise ValidationError("m and V1 must be positive")
        if self.lambda0 < 0:
            raise ValidationError("lambda0 must be >= 0")
        if self.m0 is not None and not self.m0 > 0:
            raise ValidationError("m0 must be positive")

    @property
    def lam(self) -> float:
        """Effective collapse rate ``lambda0 (m/m0)^2``."""
        m0 = self.m if self.m0 is None else self.m0
        return self.lambda0 * (self.m / m0) ** 2

    @property
    def theta(self) -> float:
        return 2.0 * math.atan2(2.0 * self.m, self.lam)

    @property
    def growth_rate(self) -> float:
        """Late-time slope of ``N``: ``g^2 V1 lambda / (m^2 + (lambda/2)^2)``."""
        lam = self.lam
        return self.g ** 2 * self.V1 * lam / (self.m ** 2 + 0.25 * lam * lam)


@dataclass(frozen=True)
class ToyMeans:
    t: np.ndarray
    N: np.ndarray
    Q: np.ndarray
    H_A: np.ndarray
    H_w: np.ndarray

    def __iter__(self):
        return iter((self.N, self.Q, self.H_A, self.H_w))


def toy_creation_means(p: ToyCreationParams, t) -> ToyMeans:
    """Mean particle number, field amplitude, matter and noise energy at times ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t must be >= 0")
    lam, m, g = p.lam, p.m, p.g
    denom = m * m + 0.25 * lam * lam
    theta = p.theta
    decay = np.exp(-0.5 * lam * t)
    n = g * g * p.V1 / denom * (lam * t - 2.0 * (math.cos(theta) - decay * np.cos(theta + m * t)))
    q = -g * m * p.V1 / denom * (1.0 - decay * (np.cos(m * t) + lam / (2.0 * m) * np.sin(m * t)))
    h_a = m * n + 2.0 * g * q
    return ToyMeans(t, n, q, h_a, -h_a)


def fock_creation_means(p: ToyCreationParams, t, levels: int = 8) -> ToyMeans:
    """Single-mode cross-check: ``H = m N + g (a + a^dag)``, collapse operator ``N``,
    vacuum start, density matrix propagated exactly in a truncated Fock space.

    Valid while the occupation stays well below ``levels``; ``V1`` scales the
    result as it does in the closed forms.
    """
    if not 2 <= levels <= 8:
        raise ValidationError("levels must lie in [2, 8]")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t must be >= 0")
    k = np.arange(levels)
    a = np.diag(np.sqrt(k[1:].astype(float)), 1)
    num = np.diag(k.astype(float))
    h = p.m * num + p.g * (a + a.T)
    eye = np.eye(levels)
    # row-major vec: vec(X rho Y) = kron(X, Y^T) vec(rho)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    gen -= 0.5 * p.lam * (k[:, None] - k[None, :]).reshape(-1) ** 2 * np.eye(levels * levels)
    rho0 = np.zeros(levels * levels, dtype=complex)
    rho0[0] = 1.0
    n_out, q_out = [], []
    for ti in t:
        rho = (expm(gen * ti) @ rho0).reshape(levels, levels)
        n_out.append(np.trace(rho @ num).real)
        q_out.append(np.trace(rho @ (0.5 * (a + a.T))).real)
    n = p.V1 * np.array(n_out)
    q = p.V1 * np.array(q_out)
    h_a = p.m * n + 2.0 * p.g * q
    return ToyMeans(t, n, q, h_a, -h_a)


@dataclass(frozen=True)
class FRWState:
    omega_m: float
    omega_w: float = 0.0
    omega_lambda: float = 0.0
    h0: float = 1.0

    def __post_init__(self):
        if not self.h0 > 0:
            raise ValidationError("h0 must be positive")

    @property
    def omega_k(self) -> float:
        return 1.0 - (self.omega_m + self.omega_w + self.omega_lambda)


def frw_budget(s: FRWState) -> tuple[float, float]:
    """Curvature density and deceleration parameter ``(omega_k, q0)``."""
    omega_k = s.omega_k
    q0 = 0.5 * (s.omega_m + s.omega_w) - s.omega_lambda
    return omega_k, q0


class TurningPointError(RuntimeError):
    """Raised when the expansion rate squared goes negative on the grid."""

    def __init__(self, time: float, scale: float):
        super().__init__(f"expansion stops at t = {time:.6g} (R/R0 = {scale:.6g})")
        self.time = time
        self.scale = scale


def hubble_squared(s: FRWState, x) -> np.ndarray:
    """``(dR/dt / R)^2`` at ``x = R/R0``."""
    x = np.asarray(x, dtype=float)
    return s.h0 ** 2 * ((s.omega_m + s.omega_w) / x ** 3 + s.omega_lambda + s.omega_k / x ** 2)


def scale_factor_evolve(s: FRWState, t_grid, rtol: float = 1e-11, atol: float = 1e-14,
                        method: str = "DOP853") -> np.ndarray:
    """``R/R0`` on ``t_grid`` (starting at 0, increasing), expanding branch.

    Integrates ``d ln R / dt = sqrt(H^2(R))`` with an adaptive Runge-Kutta
    method; raises :class:`TurningPointError` if ``H^2`` reaches zero.
    """
    return evolve_components(s, t_grid, rtol, atol, method)[0]


def evolve_components(s: FRWState, t_grid, rtol: float = 1e-11, atol: float = 1e-14,
                      method: str = "DOP853") -> tuple[np.ndarray, dict]:
    """Scale factor together with the matter and w-field densities.

    The densities (units of today's critical density) follow their own
    continuity equation ``d rho / dt = -3 (dR/dt / R) rho`` (no pressure)
    instead of the closed form, and feed back into the expansion rate.
    Returns ``(R/R0, {"matter": ..., "w_field": ...})`` on ``t_grid``.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0 or np.any(np.diff(t) <= 0):
        raise ValidationError("t_grid must start at 0 and increase strictly")
    if hubble_squared(s, 1.0) < 0:
        raise TurningPointError(0.0, 1.0)
    if t.size == 1:
        return np.ones(1), {"matter": np.array([s.omega_m]), "w_field": np.array([s.omega_w])}
    h2 = s.h0 ** 2

    def rate2(y):
        x = math.exp(y[0])
        return h2 * (y[1] + y[2] + s.omega_lambda + s.omega_k / (x * x))

    def rhs(_, y):
        hub = math.sqrt(max(rate2(y), 0.0))
        return [hub, -3.0 * hub * y[1], -3.0 * hub * y[2]]

    def stop(_, y):
        return rate2(y)
    stop.terminal = True
    stop.direction = -1

    sol = solve_ivp(rhs, (0.0, t[-1]), [0.0, s.omega_m, s.omega_w], method=method, t_eval=t,
                    events=stop, rtol=rtol, atol=atol)
    if sol.t_events[0].size:
        raise TurningPointError(float(sol.t_events[0][0]), math.exp(float(sol.y_events[0][0][0])))
    if not sol.success:
        raise RuntimeError(sol.message)
    return np.exp(sol.y[0]), {"matter": sol.y[1], "w_field": sol.y[2]}


def component_densities(s: FRWState, x) -> dict:
    """Densities in units of today's critical density for each component at ``x = R/R0``."""
    x = np.asarray(x, dtype=float)
    return {
        "matter": s.omega_m / x ** 3,
        "w_field": s.omega_w / x ** 3,
        "lambda": np.full_like(x, s.omega_lambda),
    }
