import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from cslkit.core import (CollapseOperatorSet, DensityMatrix, HermitianOperator, ModelParams,
                         StateVector, ValidationError)
from cslkit.dynamics import run_ensemble
from cslkit.lattice import LatticeSpec, build_position_collapse_ops, gaussian_packet, hopping_hamiltonian
from cslkit.master import (DensityPath, LindbladGenerator, PositivityError, analytic_density,
                           double_commutator_rate, energy_distribution, energy_grid, evolve_density,
                           lindblad_step, mean_energies)

A2 = CollapseOperatorSet.from_diagonals([[1.0, -1.0]])
C = np.array([0.6, 0.8j])


def test_analytic_density_examples():
    rho0 = analytic_density(C, [1, -1], 1.0, 0.0)
    assert np.allclose(rho0.matrix, np.outer(C, C.conj()), atol=1e-15)
    for t in (0.3, 2.0, 10.0):
        rho = analytic_density(C, [1, -1], 0.7, t)
        assert np.allclose(np.diag(rho.matrix), [0.36, 0.64], atol=1e-15)
    rho = analytic_density(C, [1, -1], 0.5, 2.0)   # lambda t = 1
    assert rho.matrix[0, 1] == pytest.approx(C[0] * C[1].conj() * math.exp(-2), abs=1e-15)
    with pytest.raises(ValidationError):
        analytic_density(C, [1, -1], 1.0, -0.1)
    with pytest.raises(ValidationError):
        analytic_density([1, 1], [1, -1], 1.0, 1.0)


def test_lindblad_step_trivial():
    rho = DensityMatrix.from_state(StateVector(C))
    out = lindblad_step(rho, None, A2, 0.0, 0.1)
    assert np.allclose(out.matrix, rho.matrix, atol=1e-15)


def test_lindblad_matches_analytic_and_trace_drift():
    lam = 1.0
    dt = 1e-3 / (lam * 4.0)
    rho0 = DensityMatrix.from_state(StateVector(C))
    path = evolve_density(rho0, None, A2, lam, dt, 2000, save_every=500)
    for t, m in zip(path.times, path.matrices):
        exact = analytic_density(C, [1, -1], lam, t).matrix
        assert np.max(np.abs(m - exact)) < 1e-8
    assert path.max_trace_drift < 1e-12


def test_lindblad_generator_matches_double_commutator_form():
    rng = np.random.default_rng(2)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    ops = CollapseOperatorSet(q, [[1.0, 0.2, -0.5], [0.3, 0.3, 2.0]], measure=[0.5, 2.0])
    hm = rng.normal(size=(3, 3))
    h = HermitianOperator(hm + hm.T)
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    rho = np.outer(psi, psi.conj()) / np.vdot(psi, psi).real
    lam = 0.4
    gen = LindbladGenerator(h, ops, lam)
    got = ops.matrix_from_eigenbasis(gen(ops.matrix_to_eigenbasis(rho)))
    want = -1j * (h.matrix @ rho - rho @ h.matrix)
    for rate, a in zip(ops.rates(lam), ops.operators):
        am = a.matrix
        want -= 0.5 * rate * (am @ am @ rho - 2 * am @ rho @ am + rho @ am @ am)
    assert np.allclose(got, want, atol=1e-12)


def test_positivity_guard():
    # a huge step makes RK4 overshoot and produce a negative eigenvalue
    rho = DensityMatrix.from_state(StateVector([math.sqrt(0.5), math.sqrt(0.5)]))
    with pytest.raises(PositivityError):
        lindblad_step(rho, None, A2, 1.0, 2.0)


def test_hermitian_and_trace_preserved():
    h = HermitianOperator([[0.0, 1.0], [1.0, 0.5]])
    path = evolve_density(DensityMatrix.from_state(StateVector(C)), h, A2, 0.3, 0.01, 300, save_every=10)
    for m in path.matrices:
        assert np.max(np.abs(m - m.conj().T)) < 1e-10
        assert abs(np.trace(m) - 1) < 1e-9


def test_lindblad_matches_trajectory_ensemble():
    h = HermitianOperator([[0.0, 0.8], [0.8, 0.0]])
    lam, dt = 0.5, 0.002
    psi = StateVector([math.sqrt(0.3), math.sqrt(0.7)])
    times = [0.2, 0.6, 1.0]
    st = run_ensemble(psi, A2, ModelParams(lam=lam, dt=dt), n_trajectories=6000, save_times=times,
                      seed=17, hamiltonian=h)
    path = evolve_density(DensityMatrix.from_state(psi), h, A2, lam, dt, 500, save_every=100)
    for s, t in enumerate(times):
        exact = path.matrices[int(round(t / 0.2))]
        est = st.estimated_density[s].matrix
        se = st.density_stderr[s]
        assert np.all(np.abs(est.real - exact.real) <= 3 * se.real + 2e-3)
        assert np.all(np.abs(est.imag - exact.imag) <= 3 * se.imag + 2e-3)


def _lattice_run(lam=0.05, steps=400, dt=0.005):
    lat = LatticeSpec(1, 48, 0.25)
    p = ModelParams(lam=lam, a=1.0, m0=1.0, dt=dt)
    ops = build_position_collapse_ops(lat, p)
    h = hopping_hamiltonian(lat)
    psi = gaussian_packet(lat, [0.0], 1.5)
    path = evolve_density(DensityMatrix.from_state(psi), h, ops, lam, dt, steps, save_every=10)
    return path, h, ops, lam


def test_energy_ledger_lattice():
    path, h, ops, lam = _lattice_run()
    led = mean_energies(path, h, ops, lam)
    assert np.all(np.diff(led.matter_energy) > 0)
    assert led.conservation_error() < 1e-6
    assert np.all(led.interaction_energy == 0)
    assert np.allclose(led.noise_energy, led.noise_energy_integrated, atol=1e-6 * led.matter_energy[0])
    # the matter energy changes at minus the noise-field rate
    fd = np.gradient(led.matter_energy, led.times, edge_order=2)
    assert np.max(np.abs(fd[2:-2] + led.noise_rate[2:-2]) / np.abs(led.noise_rate[2:-2])) < 1e-4


def test_energy_ledger_commuting_case():
    h = HermitianOperator.diagonal([0.5, 2.0])
    path = evolve_density(DensityMatrix.from_state(StateVector(C)), h, A2, 1.0, 0.01, 100, save_every=10)
    led = mean_energies(path, h, A2, 1.0)
    assert np.max(np.abs(led.noise_energy)) < 1e-14
    assert double_commutator_rate(path.matrices[3], h, A2, 1.0) == 0.0


def test_mean_energies_rejects_bad_grid():
    path, h, ops, lam = _lattice_run(steps=30)
    bad = DensityPath(np.array([0.0, 0.05, 0.07, 0.15]), path.matrices[:4])
    with pytest.raises(ValidationError):
        mean_energies(bad, h, ops, lam)
    with pytest.raises(ValidationError):
        mean_energies(DensityPath(path.times[:3], path.matrices[:2]), h, ops, lam)


def _spectrum_system():
    rng = np.random.default_rng(5)
    m = rng.normal(size=(4, 4))
    h = HermitianOperator(m + m.T)
    ops = CollapseOperatorSet.from_diagonals([[1.0, -1.0, 0.5, 0.0]])
    psi = StateVector(rng.normal(size=4)).normalized()
    return h, ops, psi


def test_energy_distribution_moments():
    h, ops, psi = _spectrum_system()
    lam = 0.3
    mean_h = float(np.vdot(psi.amplitudes, h.matrix @ psi.amplitudes).real)
    second = []
    for cutoff in (200.0, 400.0):
        spec = energy_distribution(psi, h, ops, lam, energy_grid(h, cutoff, 80001))
        mom = spec.moments()
        assert np.all(spec.density >= 0)
        assert 0 <= mom["grid_integral"] <= 1 + 1e-6
        assert abs(mom["normalization"] - 1) < 1e-3
        assert abs(mom["mean"] - mean_h) < 1e-2 * abs(mean_h)
        second.append(mom["second_moment"])
    assert second[1] / second[0] > 1.5


def test_energy_distribution_narrow_lorentzian():
    """An eigenstate input gives a Lorentzian whose width shrinks in proportion to lambda."""
    h, ops, _ = _spectrum_system()
    ev, vecs = np.linalg.eigh(h.matrix)
    psi = StateVector(vecs[:, 1])
    widths = []
    for lam in (0.02, 0.01):
        e = np.linspace(ev[1] - 0.2, ev[1] + 0.2, 40001)
        p = energy_distribution(psi, h, ops, lam, e).density
        assert abs(e[np.argmax(p)] - ev[1]) < 2e-3
        above = e[p >= 0.5 * p.max()]
        widths.append(above[-1] - above[0])
        # quadrature against the first-order Lorentzian of half-width <n|Gamma|n>
        gam = 0.5 * lam * float(np.sum(np.abs(vecs[:, 1]) ** 2 * ops.eigenvalue_table[0] ** 2))
        lor = gam / np.pi / ((e - ev[1]) ** 2 + gam ** 2)
        assert trapezoid(np.abs(p - lor), e) < 0.05
    assert widths[0] / widths[1] == pytest.approx(2.0, rel=0.05)


def test_energy_distribution_skips_singular_points():
    h = HermitianOperator.diagonal([0.0, 1.0])
    spec = energy_distribution(StateVector([1.0, 0.0]), h, A2, 0.0, [-0.5, 0.0, 0.5])
    assert spec.skipped == [0.0]


def test_superposition_small_lambda_concentrates_on_eigenvalues():
    h = HermitianOperator.diagonal([-1.0, 1.0])
    ops = CollapseOperatorSet.from_diagonals([[1.0, 2.0]])
    psi = StateVector([math.sqrt(0.25), math.sqrt(0.75)])
    e = np.linspace(-3, 3, 60001)
    p = energy_distribution(psi, h, ops, 1e-3, e).density
    left = trapezoid(p[e < 0], e[e < 0])
    right = trapezoid(p[e >= 0], e[e >= 0])
    assert left == pytest.approx(0.25, abs=2e-3)
    assert right == pytest.approx(0.75, abs=2e-3)
