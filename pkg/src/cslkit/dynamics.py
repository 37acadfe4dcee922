"""Stochastic state-vector evolution and ensemble Monte Carlo.

Two samplers of the same noise measure are provided:

* Scheme ``"A"`` draws raw Gaussian white noise (mean 0, variance
  ``lambda_k/dt`` per channel and step) and carries the importance weight
  ``dP/dRaw`` along each trajectory.
* Scheme ``"B"`` samples the physical measure directly: at each step a basis
  label ``n`` is drawn with the current squared amplitude, then the noise is
  drawn from a Gaussian centred on ``2 lambda_k a_k(n)``.

Per-step update in the collapse eigenbasis (exact when there is no
Hamiltonian)::

    c_n <- c_n * exp(-(dt / 4 lambda_k) * sum_k (w_k - 2 lambda_k a_k(n))**2)

With a Hamiltonian, ``exp(-i H dt)`` is applied first (first-order Trotter).

Random streams: trajectory ``i`` of an ensemble with master seed ``s`` uses
``PCG64(SeedSequence([s, i]))``. Scheme A draws ``standard_normal((steps, K))``;
Scheme B draws ``random(steps)`` and then ``standard_normal((steps, K))``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .core import (CollapseOperatorSet, DensityMatrix, HermitianOperator, ModelParams,
                   NoiseTrajectory, StateVector, ValidationError)

log = logging.getLogger(__name__)

UNRESOLVED = "unresolved"


class TrajectoryAborted(RuntimeError):
    """Raised when a trajectory state underflows to zero norm."""


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    """Random generator for trajectory ``index`` of an ensemble seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


class _Kernel:
    """Per-configuration constants of the stepper, all in the collapse eigenbasis."""

    def __init__(self, ops: CollapseOperatorSet, hamiltonian: Optional[HermitianOperator],
                 params: ModelParams):
        self.ops = ops
        self.dt = params.dt
        self.rates = ops.rates(params.lam)
        self.table = ops.eigenvalue_table
        self.active = self.rates > 0
        # log of the amplitude factor with the noise-independent part only
        self.drift = -params.dt * (self.rates @ self.table ** 2)
        self.sigma = np.sqrt(self.rates / params.dt)
        self.unitary = None
        if hamiltonian is not None:
            if hamiltonian.dim != ops.dim:
                raise ValidationError("Hamiltonian and collapse operators differ in dimension")
            h = ops.matrix_to_eigenbasis(hamiltonian.matrix)
            self.unitary = expm(-1j * params.dt * h)

    def check_noise(self, w: np.ndarray):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if w.shape[-1] != self.table.shape[0]:
            raise ValidationError(
                f"noise has {w.shape[-1]} channels, expected {self.table.shape[0]}")
        if np.any(w[..., ~self.active] != 0):
            raise ValidationError("nonzero noise on a channel with zero collapse rate")
        return w

    def log_factor(self, w: np.ndarray) -> np.ndarray:
        """Log amplitude factor up to the n-independent term ``-dt w^2 / 4 lambda``.

        ``w`` has shape (..., K); the result has shape (..., N).
        """
        return self.dt * (w @ self.table) + self.drift

    def log_factor_full(self, w: np.ndarray) -> np.ndarray:
        """The complete exponent ``-(dt/4 lambda_k) sum_k (w_k - 2 lambda_k a_k(n))^2``."""
        out = np.zeros(w.shape[:-1] + (self.table.shape[1],))
        for k in np.flatnonzero(self.active):
            lam = self.rates[k]
            diff = w[..., k, None] - 2.0 * lam * self.table[k]
            out -= self.dt / (4.0 * lam) * diff ** 2
        return out

    def rotate(self, psi: np.ndarray) -> np.ndarray:
        return psi if self.unitary is None else psi @ self.unitary.T


def linear_step(state: StateVector, noise_slice, collapse_ops: CollapseOperatorSet,
                hamiltonian: Optional[HermitianOperator], params: ModelParams) -> StateVector:
    """One step of the linear (unnormalized) dynamics for a given noise slice."""
    if state.dim != collapse_ops.dim:
        raise ValidationError("state and collapse operators differ in dimension")
    kern = _Kernel(collapse_ops, hamiltonian, params)
    w = kern.check_noise(noise_slice)
    psi = kern.rotate(collapse_ops.to_eigenbasis(state.amplitudes))
    psi = psi * np.exp(kern.log_factor_full(w))
    return state.with_amplitudes(collapse_ops.from_eigenbasis(psi))


def _linear_log_norm(initial: StateVector, noise: NoiseTrajectory, collapse_ops,
                     hamiltonian, params, full: bool) -> float:
    if noise.dt != params.dt:
        raise ValidationError("noise dt differs from params.dt")
    kern = _Kernel(collapse_ops, hamiltonian, params)
    samples = kern.check_noise(noise.samples)
    n0 = initial.norm_sq()
    psi = kern.ops.to_eigenbasis(initial.amplitudes).astype(complex) / math.sqrt(n0)
    log_norm = math.log(n0)
    for w in samples:
        psi = kern.rotate(psi)
        lf = kern.log_factor_full(w) if full else kern.log_factor(w)
        shift = lf.max()
        psi = psi * np.exp(lf - shift)
        n2 = np.vdot(psi, psi).real
        if not n2 > 0:
            return -math.inf
        log_norm += 2.0 * shift + math.log(n2)
        psi /= math.sqrt(n2)
    return log_norm


def probability_density(initial: StateVector, noise: NoiseTrajectory, collapse_ops,
                        hamiltonian, params) -> float:
    """Squared norm of the linearly evolved state: the density of the physical
    measure relative to the flat measure ``prod dw / sqrt(2 pi lambda / dt)``."""
    return math.exp(_linear_log_norm(initial, noise, collapse_ops, hamiltonian, params, True))


def trajectory_weight(initial: StateVector, noise: NoiseTrajectory, collapse_ops,
                      hamiltonian, params) -> float:
    """Importance weight of a raw-Gaussian noise path.

    Equals :func:`probability_density` divided by the Gaussian density of the
    raw path, so its mean over raw draws is 1.
    """
    return math.exp(_linear_log_norm(initial, noise, collapse_ops, hamiltonian, params, False))


def physical_step(state: StateVector, rng: np.random.Generator, collapse_ops: CollapseOperatorSet,
                  hamiltonian: Optional[HermitianOperator], params: ModelParams):
    """Advance a normalized state by one step, sampling noise from the physical measure.

    Returns ``(new_state, noise_slice)``.
    """
    kern = _Kernel(collapse_ops, hamiltonian, params)
    psi = kern.rotate(collapse_ops.to_eigenbasis(state.normalized().amplitudes))
    u = rng.random()
    z = rng.standard_normal(kern.table.shape[0])
    n = _pick(np.abs(psi[None, :]) ** 2, np.array([u]))[0]
    w = 2.0 * kern.rates * kern.table[:, n] + kern.sigma * z
    lf = kern.log_factor(w)
    psi = psi * np.exp(lf - lf.max())
    n2 = np.vdot(psi, psi).real
    if not n2 > 0 or not np.isfinite(n2):
        raise TrajectoryAborted("state norm underflowed")
    psi /= math.sqrt(n2)
    return state.with_amplitudes(collapse_ops.from_eigenbasis(psi)), w


def collapse_outcome(state: StateVector, tol: float = 1e-6):
    """Label ``m`` whose squared amplitude exceeds ``1 - tol``, else ``None``."""
    p = state.probabilities()
    m = int(np.argmax(p))
    return state.basis_labels[m] if p[m] > 1.0 - tol else None


def _pick(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row of ``p`` (rows need not be normalized)."""
    cdf = np.cumsum(p, axis=1)
    cdf /= cdf[:, -1:]
    idx = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(idx, p.shape[1] - 1)


@dataclass
class _BatchResult:
    states: np.ndarray      # (B, S, N) normalized, eigenbasis
    log_weights: np.ndarray  # (B, S)
    aborted: np.ndarray     # (B,)
    noise: Optional[np.ndarray] = None  # (B, steps, K)


def _run_batch(kern: _Kernel, psi0: np.ndarray, indices: Sequence[int], seed: int,
               save_steps: np.ndarray, scheme: str, keep_noise: bool = False) -> _BatchResult:
    steps = int(save_steps[-1]) if len(save_steps) else 0
    n_ch = kern.table.shape[0]
    b = len(indices)
    z = np.empty((b, steps, n_ch))
    u = np.empty((b, steps)) if scheme == "B" else None
    for j, i in enumerate(indices):
        rng = trajectory_stream(seed, i)
        if scheme == "B":
            u[j] = rng.random(steps)
        z[j] = rng.standard_normal((steps, n_ch))

    n = psi0.size
    psi = np.tile(psi0 / np.linalg.norm(psi0), (b, 1)).astype(complex)
    logw = np.zeros(b)
    aborted = np.zeros(b, dtype=bool)
    out_states = np.empty((b, len(save_steps), n), dtype=complex)
    out_logw = np.empty((b, len(save_steps)))
    noise = np.empty((b, steps, n_ch)) if keep_noise else None
    save_pos = {int(s): [] for s in save_steps}
    for pos, s in enumerate(save_steps):
        save_pos[int(s)].append(pos)

    def record(step):
        for pos in save_pos.get(step, ()):
            out_states[:, pos] = psi
            out_logw[:, pos] = logw

    record(0)
    for step in range(steps):
        psi = kern.rotate(psi)
        if scheme == "A":
            w = z[:, step] * kern.sigma
        else:
            labels = _pick(np.abs(psi) ** 2, u[:, step])
            w = 2.0 * kern.rates * kern.table[:, labels].T + z[:, step] * kern.sigma
        if keep_noise:
            noise[:, step] = w
        lf = kern.log_factor(w)
        shift = lf.max(axis=1)
        psi = psi * np.exp(lf - shift[:, None])
        n2 = np.einsum("bn,bn->b", psi.real, psi.real) + np.einsum("bn,bn->b", psi.imag, psi.imag)
        bad = ~(n2 > 0) | ~np.isfinite(n2)
        if bad.any():
            aborted |= bad
            n2 = np.where(bad, 1.0, n2)
        if scheme == "A":
            logw += 2.0 * shift + np.log(n2)
        psi /= np.sqrt(n2)[:, None]
        record(step + 1)
    out_states[aborted] = np.nan
    return _BatchResult(out_states, out_logw, aborted, noise)


def _save_steps(save_times: Sequence[float], dt: float) -> np.ndarray:
    times = np.asarray(save_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValidationError("save_times must be a non-empty 1-D sequence")
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValidationError("save_times must be non-negative and non-decreasing")
    steps = np.rint(times / dt).astype(int)
    off = np.abs(steps * dt - times)
    if np.any(off > 1e-9 * np.maximum(1.0, times / dt) * dt):
        raise ValidationError("save_times must be integer multiples of dt")
    return steps


@dataclass
class TrajectoryRecord:
    save_times: np.ndarray
    states: list
    weight: float
    outcome: object = None
    noise: Optional[NoiseTrajectory] = None
    seed: int = 0
    index: int = 0


def simulate_trajectory(initial: StateVector, collapse_ops: CollapseOperatorSet,
                        params: ModelParams, save_times: Sequence[float], *,
                        hamiltonian: Optional[HermitianOperator] = None, scheme: str = "B",
                        seed: int = 0, index: int = 0, store_noise: bool = False,
                        outcome_tol: float = 1e-6) -> TrajectoryRecord:
    """Run a single trajectory; identical to trajectory ``index`` of an ensemble."""
    scheme = _check_scheme(scheme)
    kern = _Kernel(collapse_ops, hamiltonian, params)
    steps = _save_steps(save_times, params.dt)
    res = _run_batch(kern, collapse_ops.to_eigenbasis(initial.amplitudes), [index], seed,
                     steps, scheme, keep_noise=store_noise)
    if res.aborted[0]:
        raise TrajectoryAborted(f"trajectory {index} underflowed")
    states = [initial.with_amplitudes(collapse_ops.from_eigenbasis(s)) for s in res.states[0]]
    weight = math.exp(res.log_weights[0, -1]) if scheme == "A" else 1.0
    noise = NoiseTrajectory(res.noise[0], params.dt) if store_noise else None
    return TrajectoryRecord(steps * params.dt, states, weight,
                            collapse_outcome(states[-1], outcome_tol), noise, seed, index)


@dataclass
class MomentSeries:
    mean: np.ndarray
    second_moment: np.ndarray
    variance: np.ndarray
    mean_stderr: np.ndarray
    second_moment_stderr: np.ndarray


@dataclass
class EnsembleStats:
    scheme: str
    seed: int
    save_times: np.ndarray
    trajectory_count: int
    aborted_count: int
    outcome_frequencies: dict
    outcome_stderr: dict
    probability_mean: np.ndarray       # (S, N) mean squared amplitudes, eigenbasis
    probability_stderr: np.ndarray
    estimated_density: list            # DensityMatrix per save time
    density_stderr: np.ndarray         # (S, N, N) complex: SE of real + 1j * SE of imag
    moment_series: dict = field(default_factory=dict)
    mean_weight: float = 1.0
    mean_weight_stderr: float = 0.0
    effective_sample_size: float = 0.0

    @property
    def resolved_fraction(self) -> float:
        return 1.0 - self.outcome_frequencies.get(UNRESOLVED, 0.0)


def _weighted(w: np.ndarray, f: np.ndarray):
    """Self-normalized weighted mean and its delta-method standard error along axis 0."""
    wsum = w.sum()
    shape = (-1,) + (1,) * (f.ndim - 1)
    wb = w.reshape(shape)
    mean = (wb * f).sum(axis=0) / wsum
    dev = f - mean
    n = w.size
    corr = math.sqrt(n / (n - 1)) if n > 1 else 1.0
    if np.iscomplexobj(f):
        se = (np.sqrt((wb ** 2 * dev.real ** 2).sum(axis=0))
              + 1j * np.sqrt((wb ** 2 * dev.imag ** 2).sum(axis=0))) / wsum * corr
    else:
        se = np.sqrt((wb ** 2 * dev ** 2).sum(axis=0)) / wsum * corr
    return mean, se


def _check_scheme(scheme: str) -> str:
    s = str(scheme).upper()
    if s not in ("A", "B"):
        raise ValidationError(f"unknown scheme {scheme!r}; expected 'A' or 'B'")
    return s


def run_ensemble(initial: StateVector, collapse_ops: CollapseOperatorSet, params: ModelParams,
                 *, n_trajectories: int, save_times: Sequence[float], seed: int,
                 hamiltonian: Optional[HermitianOperator] = None, scheme: str = "B",
                 observables: Mapping[str, HermitianOperator] | None = None,
                 outcome_tol: float = 1e-6, workers: int = 1,
                 chunk_size: Optional[int] = None) -> EnsembleStats:
    """Run ``n_trajectories`` independent trajectories and reduce them to statistics.

    Scheme A estimates are self-normalized importance-weighted averages with
    the weight accumulated up to each save time; Scheme B averages are plain.
    Results depend only on the arguments, never on ``workers``.
    """
    scheme = _check_scheme(scheme)
    if n_trajectories < 1:
        raise ValidationError("need at least one trajectory")
    if initial.dim != collapse_ops.dim:
        raise ValidationError("initial state and collapse operators differ in dimension")
    kern = _Kernel(collapse_ops, hamiltonian, params)
    steps = _save_steps(save_times, params.dt)
    psi0 = collapse_ops.to_eigenbasis(initial.amplitudes)
    n_ch = collapse_ops.n_channels
    if chunk_size is None:
        chunk_size = int(np.clip(2_000_000 // max(1, int(steps[-1]) * n_ch), 1, 2000))
    chunks = [list(range(s, min(s + chunk_size, n_trajectories)))
              for s in range(0, n_trajectories, chunk_size)]

    def work(idx):
        return _run_batch(kern, psi0, idx, seed, steps, scheme)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    states = np.concatenate([r.states for r in results])
    logw = np.concatenate([r.log_weights for r in results])
    aborted = np.concatenate([r.aborted for r in results])
    if aborted.any():
        log.warning("%d of %d trajectories aborted (norm underflow); excluded",
                    int(aborted.sum()), n_trajectories)
    keep = ~aborted
    states, logw = states[keep], logw[keep]
    count = int(keep.sum())
    if count == 0:
        raise TrajectoryAborted("every trajectory aborted")

    if scheme == "A":
        top = logw.max(axis=0)
        w_all = np.exp(logw - top)
    else:
        top = np.zeros(logw.shape[1])
        w_all = np.ones_like(logw)

    probs = np.abs(states) ** 2
    n_sav = len(steps)
    p_mean = np.empty((n_sav, psi0.size))
    p_se = np.empty_like(p_mean)
    dens, dens_se = [], np.empty((n_sav, psi0.size, psi0.size), dtype=complex)
    obs_eig = {name: collapse_ops.matrix_to_eigenbasis(op.matrix)
               for name, op in (observables or {}).items()}
    moments = {name: {"mean": [], "second": [], "mean_se": [], "second_se": []} for name in obs_eig}
    for s in range(n_sav):
        w = w_all[:, s]
        psi = states[:, s]
        p_mean[s], p_se[s] = _weighted(w, probs[:, s])
        outer = psi[:, :, None] * psi[:, None, :].conj()
        rho_eig, rho_se = _weighted(w, outer)
        rho = collapse_ops.matrix_from_eigenbasis(rho_eig)
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.trace(rho).real
        dens.append(DensityMatrix(rho))
        dens_se[s] = rho_se
        for name, b in obs_eig.items():
            vals = np.einsum("bi,ij,bj->b", psi.conj(), b, psi).real
            m1, se1 = _weighted(w, vals)
            m2, se2 = _weighted(w, vals ** 2)
            mo = moments[name]
            mo["mean"].append(m1)
            mo["second"].append(m2)
            mo["mean_se"].append(se1)
            mo["second_se"].append(se2)

    moment_series = {}
    for name, mo in moments.items():
        m1, m2 = np.array(mo["mean"]), np.array(mo["second"])
        moment_series[name] = MomentSeries(m1, m2, np.maximum(m2 - m1 ** 2, 0.0),
                                           np.array(mo["mean_se"]), np.array(mo["second_se"]))

    w_final = w_all[:, -1]
    p_final = probs[:, -1]
    labels = collapse_ops.basis_labels
    top_idx = np.argmax(p_final, axis=1)
    resolved = p_final[np.arange(count), top_idx] > 1.0 - outcome_tol
    freqs, freq_se = {}, {}
    for n, lab in enumerate(labels):
        ind = (resolved & (top_idx == n)).astype(float)
        f, se = _weighted(w_final, ind)
        freqs[lab], freq_se[lab] = float(f), float(se)
    f, se = _weighted(w_final, (~resolved).astype(float))
    freqs[UNRESOLVED], freq_se[UNRESOLVED] = float(f), float(se)

    if scheme == "A":
        raw = np.exp(logw[:, -1] - top[-1])
        scale = math.exp(top[-1])
        mean_w = float(raw.mean() * scale)
        mean_w_se = float(raw.std(ddof=1) * scale / math.sqrt(count)) if count > 1 else 0.0
        ess = float(raw.sum() ** 2 / (raw ** 2).sum())
    else:
        mean_w, mean_w_se, ess = 1.0, 0.0, float(count)

    return EnsembleStats(
        scheme=scheme, seed=int(seed), save_times=steps * params.dt,
        trajectory_count=count, aborted_count=int(aborted.sum()),
        outcome_frequencies=freqs, outcome_stderr=freq_se,
        probability_mean=p_mean, probability_stderr=p_se,
        estimated_density=dens, density_stderr=dens_se, moment_series=moment_series,
        mean_weight=mean_w, mean_weight_stderr=mean_w_se, effective_sample_size=ess)


def weight_samples(initial: StateVector, collapse_ops: CollapseOperatorSet, params: ModelParams,
                   *, n_trajectories: int, horizon: float, seed: int,
                   hamiltonian: Optional[HermitianOperator] = None) -> np.ndarray:
    """Raw-measure importance weights of ``n_trajectories`` Scheme-A paths at ``horizon``."""
    kern = _Kernel(collapse_ops, hamiltonian, params)
    steps = _save_steps([horizon], params.dt)
    psi0 = collapse_ops.to_eigenbasis(initial.amplitudes)
    res = _run_batch(kern, psi0, range(n_trajectories), seed, steps, "A")
    return np.exp(res.log_weights[:, -1])
