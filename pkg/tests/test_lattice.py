import math
import warnings

import numpy as np
import pytest

from cslkit.core import DensityMatrix, ModelParams, ValidationError, commutation_check
from cslkit.lattice import (BoundaryWarning, LatticeSpec, build_position_collapse_ops,
                            continuum_heating_rate, gaussian_packet, hopping_hamiltonian,
                            pair_decay_rate, saturated_pair_rate)
from cslkit.master import evolve_density, mean_energies

P = ModelParams(lam=0.05, a=1.0, m0=1.0, dt=0.005)


@pytest.mark.filterwarnings("ignore::cslkit.lattice.BoundaryWarning")
@pytest.mark.parametrize("d", [1, 2, 3])
def test_operator_entries(d):
    lat = LatticeSpec(d, 9 if d < 3 else 5, 0.5, (2.0,))
    ops = build_position_collapse_ops(lat, P)
    sites = lat.sites()
    z = len(sites) // 2            # the central site
    col = ops.eigenvalue_table[:, z]
    peak = 2.0 * (math.pi * P.a ** 2) ** (-d / 4)
    assert col[z] == pytest.approx(peak, rel=1e-14)
    dist = np.linalg.norm(sites - sites[z], axis=1)
    at_a = np.isclose(dist, P.a)
    assert at_a.any()
    assert np.allclose(col[at_a], peak * math.exp(-0.5), rtol=1e-14)
    assert ops.diagonal
    assert commutation_check(ops.operators[:4]) == 0.0
    assert np.allclose(ops.measure, lat.cell_volume)


def test_two_particle_operators_sum():
    lat = LatticeSpec(1, 6, 1.0, (1.0, 3.0))
    ops = build_position_collapse_ops(lat, P)
    one = build_position_collapse_ops(LatticeSpec(1, 6, 1.0, (1.0,)), P).eigenvalue_table
    assert ops.dim == 36
    i, j = 2, 5
    assert np.allclose(ops.eigenvalue_table[:, i * 6 + j], one[:, i] + 3.0 * one[:, j])


def test_memory_guard_and_spec_checks():
    with pytest.raises(ValidationError):
        build_position_collapse_ops(LatticeSpec(3, 20, 0.5), P)
    with pytest.raises(ValidationError):
        LatticeSpec(4, 4, 1.0)
    with pytest.raises(ValidationError):
        LatticeSpec(1, 1, 1.0)
    with pytest.raises(ValidationError):
        LatticeSpec(1, 4, 1.0, (1.0, 1.0, 1.0))
    with pytest.warns(BoundaryWarning):
        build_position_collapse_ops(LatticeSpec(1, 6, 0.5), P)


LAT = LatticeSpec(1, 161, 0.125)


def test_pair_rate_zero_monotone_saturating():
    assert pair_decay_rate(LAT, P, 0.0) == 0.0
    seps = np.linspace(0, 10, 41)
    rates = [pair_decay_rate(LAT, P, s) for s in seps]
    assert np.all(np.diff(rates) >= 0)
    sat = saturated_pair_rate(LAT, P)
    assert rates[-1] == pytest.approx(sat, rel=1e-6)
    # continuum: lambda (1 - exp(-d^2 / 4 a^2))
    assert np.allclose(rates, P.lam * (1 - np.exp(-seps ** 2 / 4)), rtol=1e-9, atol=1e-15)


def test_pair_rate_small_separation_slope():
    d = np.array([0.01, 0.1])
    r = [pair_decay_rate(LAT, P, x) for x in d]
    slope = math.log(r[1] / r[0]) / math.log(d[1] / d[0])
    assert slope == pytest.approx(2.0, abs=0.05)


def test_pair_rate_boundary_insensitive_and_guards():
    small = LatticeSpec(1, 81, 0.125)
    big = LatticeSpec(1, 161, 0.125)
    r1, r2 = pair_decay_rate(small, P, 1.5), pair_decay_rate(big, P, 1.5)
    assert abs(r1 - r2) / r2 < 1e-3
    with pytest.raises(ValidationError):
        pair_decay_rate(small, P, 100.0)
    with pytest.warns(BoundaryWarning):
        pair_decay_rate(small, P, 8.0)


def test_free_particle_heating():
    a = P.a
    lat = LatticeSpec(1, 64, a / 4)              # spacing a/4, extent*spacing = 16a
    ops = build_position_collapse_ops(lat, P)
    h = hopping_hamiltonian(lat)
    psi = gaussian_packet(lat, [0.0], 1.5)
    path = evolve_density(DensityMatrix.from_state(psi), h, ops, P.lam, P.dt, 400, save_every=10)
    led = mean_energies(path, h, ops, P.lam)
    fd = np.gradient(led.matter_energy, led.times, edge_order=2)
    assert np.max(np.abs(fd[2:-2] + led.noise_rate[2:-2]) / np.abs(led.noise_rate[2:-2])) < 1e-6
    slope = (led.matter_energy[-1] - led.matter_energy[0]) / led.times[-1]
    assert slope == pytest.approx(continuum_heating_rate(P, 1.0), rel=0.05)


def test_hopping_hamiltonian_dispersion():
    lat = LatticeSpec(1, 40, 0.1, (2.0,))
    h = hopping_hamiltonian(lat).matrix
    ev = np.linalg.eigvalsh(h)
    # lowest open-chain mode ~ (pi / L)^2 / (2 m)
    k = math.pi / (41 * 0.1)
    assert ev[0] == pytest.approx(k * k / 4.0, rel=0.01)
    two = hopping_hamiltonian(LatticeSpec(1, 5, 0.5, (1.0, 2.0)))
    assert two.dim == 25


def test_gaussian_packet_normalized_and_centred():
    lat = LatticeSpec(2, 31, 0.5)
    psi = gaussian_packet(lat, [0.5, -1.0], 1.0, momentum=[0.3, 0.0])
    assert psi.norm_sq() == pytest.approx(1.0, abs=1e-12)
    x = lat.sites()
    mean = (np.abs(psi.amplitudes) ** 2) @ x
    assert np.allclose(mean, [0.5, -1.0], atol=1e-3)
