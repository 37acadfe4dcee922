"""Finite-dimensional linear-algebra substrate shared by every other module.

All objects here are immutable after construction. Matrices are dense
``numpy`` arrays; the largest systems in this package have a few thousand
basis states at most.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

import numpy as np

from . import constants


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances used by validators and by the test-suite."""

    hermitian_rel: float = 1e-12
    commute_rel: float = 1e-10
    eigen_roundtrip: float = 1e-10
    density_hermitian: float = 1e-10
    density_trace: float = 1e-9
    density_min_eig: float = -1e-9
    positivity_error: float = -1e-6
    expectation_imag: float = 1e-12
    variance_floor: float = -1e-12
    state_norm: float = 1e-10
    weights_sum: float = 1e-9


TOLERANCES = ToleranceConfig()


class ValidationError(ValueError):
    """An input object violates one of its invariants."""


def _as_complex_matrix(m: Any) -> np.ndarray:
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over an ordered list of basis labels."""

    amplitudes: np.ndarray
    basis_labels: tuple = ()

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(amps)):
            raise ValidationError("state amplitudes must be finite")
        labels = tuple(self.basis_labels) or tuple(range(amps.size))
        if len(labels) != amps.size:
            raise ValidationError(
                f"{len(labels)} labels for {amps.size} amplitudes")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "basis_labels", labels)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "StateVector":
        n2 = self.norm_sq()
        if not n2 > 0:
            raise ValidationError("cannot normalize a zero state")
        return StateVector(self.amplitudes / np.sqrt(n2), self.basis_labels)

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def with_amplitudes(self, amps) -> "StateVector":
        return StateVector(amps, self.basis_labels)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = _as_complex_matrix(self.matrix)
        scale = np.max(np.abs(m)) if m.size else 0.0
        if np.max(np.abs(m - m.conj().T), initial=0.0) > TOLERANCES.hermitian_rel * scale:
            raise ValidationError("operator is not self-adjoint")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def diagonal(cls, values) -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = _as_complex_matrix(self.matrix)
        tol = TOLERANCES
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol.density_hermitian:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > tol.density_trace:
            raise ValidationError(f"density matrix trace {np.trace(m).real!r} != 1")
        lo = min_eigenvalue(m)
        if lo < tol.density_min_eig:
            raise ValidationError(f"density matrix has eigenvalue {lo:.3e} < 0")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        psi = state.normalized().amplitudes
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def min_eigenvalue(m: np.ndarray) -> float:
    herm = 0.5 * (m + m.conj().T)
    return float(np.linalg.eigvalsh(herm)[0])


@dataclass(frozen=True)
class ModelParams:
    """Collapse-model parameters (CGS).

    ``lam`` is the collapse rate (1/s), ``a`` the smearing length (cm),
    ``m0`` the reference mass (g), ``alpha`` per-species coupling ratios and
    ``dt`` the integration step (s).
    """

    lam: float = constants.GRW_LAMBDA
    a: float = constants.GRW_A
    m0: float = constants.PROTON_MASS
    alpha: tuple = (1.0,)
    dt: float = 1e-3

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValidationError("lambda must be >= 0")
        if not self.a > 0:
            raise ValidationError("a must be > 0")
        if not self.m0 > 0:
            raise ValidationError("m0 must be > 0")
        if not self.dt > 0:
            raise ValidationError("dt must be > 0")
        object.__setattr__(self, "alpha", tuple(float(x) for x in self.alpha))


@dataclass(frozen=True, eq=False)
class CollapseOperatorSet:
    """Mutually commuting Hermitian operators stored through their eigenvalues.

    ``eigenvalue_table[k, n]`` is the eigenvalue of operator ``k`` on the
    ``n``-th column of ``eigenbasis``. ``measure[k]`` is the quadrature
    weight of channel ``k`` (the lattice cell volume for smeared mass
    densities, 1 otherwise); channel ``k`` collapses at rate
    ``lambda * measure[k]``.
    """

    eigenbasis: np.ndarray
    eigenvalue_table: np.ndarray
    measure: np.ndarray = None
    basis_labels: tuple = ()
    diagonal: bool = field(default=False)

    def __post_init__(self):
        table = np.array(self.eigenvalue_table, dtype=float)
        if table.ndim == 1:
            table = table[None, :]
        if not np.all(np.isfinite(table)):
            raise ValidationError("eigenvalues must be finite")
        k, n = table.shape
        u = np.array(self.eigenbasis, dtype=complex)
        if u.shape != (n, n):
            raise ValidationError(f"eigenbasis shape {u.shape} does not match {n} states")
        if np.max(np.abs(u.conj().T @ u - np.eye(n)), initial=0.0) > 1e-10:
            raise ValidationError("eigenbasis is not unitary")
        meas = np.ones(k) if self.measure is None else np.array(self.measure, dtype=float).reshape(-1)
        if meas.shape != (k,) or np.any(meas <= 0):
            raise ValidationError("measure must hold one positive weight per operator")
        labels = tuple(self.basis_labels) or tuple(range(n))
        for arr in (table, u, meas):
            arr.setflags(write=False)
        object.__setattr__(self, "eigenvalue_table", table)
        object.__setattr__(self, "eigenbasis", u)
        object.__setattr__(self, "measure", meas)
        object.__setattr__(self, "basis_labels", labels)
        object.__setattr__(self, "diagonal", bool(np.allclose(u, np.eye(n), atol=0, rtol=0)))

    @property
    def dim(self) -> int:
        return self.eigenvalue_table.shape[1]

    @property
    def n_channels(self) -> int:
        return self.eigenvalue_table.shape[0]

    @property
    def operators(self) -> list[HermitianOperator]:
        u = self.eigenbasis
        return [HermitianOperator((u * row) @ u.conj().T) for row in self.eigenvalue_table]

    def rates(self, lam: float) -> np.ndarray:
        """Per-channel collapse rates ``lambda * measure``."""
        return lam * self.measure

    def to_eigenbasis(self, vec: np.ndarray) -> np.ndarray:
        return vec if self.diagonal else self.eigenbasis.conj().T @ vec

    def from_eigenbasis(self, vec: np.ndarray) -> np.ndarray:
        return vec if self.diagonal else self.eigenbasis @ vec

    def matrix_to_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        if self.diagonal:
            return np.asarray(m, dtype=complex)
        u = self.eigenbasis
        return u.conj().T @ m @ u

    def matrix_from_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        if self.diagonal:
            return m
        u = self.eigenbasis
        return u @ m @ u.conj().T

    @classmethod
    def from_diagonals(cls, table, measure=None, basis_labels=()) -> "CollapseOperatorSet":
        """Operators that are diagonal in the computational basis."""
        table = np.atleast_2d(np.asarray(table, dtype=float))
        return cls(np.eye(table.shape[1]), table, measure, basis_labels)

    @classmethod
    def from_operators(cls, ops: Sequence[HermitianOperator], measure=None,
                       basis_labels=()) -> "CollapseOperatorSet":
        """Build the set from explicit matrices.

        Diagonalizes the first operator and checks that the rest are diagonal
        in its eigenbasis. If the first operator is degenerate and the check
        fails, a fixed generic linear combination is diagonalized instead.
        """
        if not ops:
            raise ValidationError("need at least one collapse operator")
        mats = [op.matrix if isinstance(op, HermitianOperator) else HermitianOperator(op).matrix
                for op in ops]
        n = mats[0].shape[0]
        if any(m.shape != (n, n) for m in mats):
            raise ValidationError("collapse operators have different dimensions")
        scale = max(np.max(np.abs(m)) for m in mats) or 1.0
        tol = TOLERANCES.commute_rel * scale * scale
        if commutation_check([HermitianOperator(m) for m in mats]) > tol:
            raise ValidationError("collapse operators do not commute")

        if all(np.count_nonzero(m - np.diag(np.diag(m))) == 0 for m in mats):
            return cls.from_diagonals([np.diag(m).real for m in mats], measure, basis_labels)

        candidates = [mats[0]]
        weights = np.random.default_rng(0).uniform(0.5, 1.5, len(mats))
        candidates.append(sum(w * m for w, m in zip(weights, mats)))
        for cand in candidates:
            _, u = np.linalg.eigh(cand)
            diag = [u.conj().T @ m @ u for m in mats]
            off = max(np.max(np.abs(d - np.diag(np.diag(d)))) for d in diag)
            if off <= TOLERANCES.eigen_roundtrip * scale:
                table = [np.diag(d).real for d in diag]
                return cls(u, table, measure, basis_labels)
        raise ValidationError("could not find a shared eigenbasis")


@dataclass(frozen=True, eq=False)
class NoiseTrajectory:
    """Per-step, per-channel noise samples ``w[step, channel]``.

    Raw draws have zero mean and variance ``lambda_k / dt``.
    """

    samples: np.ndarray
    dt: float

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2:
            raise ValidationError("noise samples must be [step, channel]")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        if not self.dt > 0:
            raise ValidationError("dt must be > 0")

    @property
    def steps(self) -> int:
        return self.samples.shape[0]

    @property
    def channels(self) -> int:
        return self.samples.shape[1]

    @classmethod
    def raw(cls, rng: np.random.Generator, steps: int, rates, dt: float) -> "NoiseTrajectory":
        rates = np.atleast_1d(np.asarray(rates, dtype=float))
        z = rng.standard_normal((steps, rates.size))
        return cls(z * np.sqrt(rates / dt), dt)


def _check_dims(op: HermitianOperator, state: StateVector):
    if op.dim != state.dim:
        raise ValidationError(f"operator dimension {op.dim} != state dimension {state.dim}")


def expectation(op: HermitianOperator, state: StateVector) -> float:
    """``<psi|B|psi> / <psi|psi>``."""
    _check_dims(op, state)
    psi = state.amplitudes
    n2 = np.vdot(psi, psi).real
    if not n2 > 0:
        raise ValidationError("state has zero norm")
    val = np.vdot(psi, op.matrix @ psi) / n2
    if abs(val.imag) > TOLERANCES.expectation_imag * max(1.0, abs(val.real)):
        raise ValidationError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def variance(op: HermitianOperator, state: StateVector) -> float:
    """``<B^2> - <B>^2``, clamped at zero."""
    _check_dims(op, state)
    psi = state.amplitudes
    n2 = np.vdot(psi, psi).real
    if not n2 > 0:
        raise ValidationError("state has zero norm")
    bpsi = op.matrix @ psi
    mean = np.vdot(psi, bpsi).real / n2
    second = np.vdot(bpsi, bpsi).real / n2
    var = second - mean * mean
    if var < TOLERANCES.variance_floor * max(1.0, second):
        raise ValidationError(f"negative variance {var:.3e}")
    return max(float(var), 0.0)


def commutation_check(ops: Sequence[HermitianOperator]) -> float:
    """Largest entry magnitude over all pairwise commutators."""
    worst = 0.0
    mats = [op.matrix for op in ops]
    if mats and any(m.shape != mats[0].shape for m in mats):
        raise ValidationError("operators have different dimensions")
    for j in range(len(mats)):
        for k in range(j + 1, len(mats)):
            c = mats[j] @ mats[k] - mats[k] @ mats[j]
            worst = max(worst, float(np.max(np.abs(c))))
    return worst
