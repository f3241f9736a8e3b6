import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import erf

import Simulators
import linops
from envelope import make_grid
from Simulators import FULL_TENSOR, SYMMETRIC_DICKE, PulseSpec, SystemSpec


def test_dimensions():
    assert SystemSpec(n_atoms=3, n_max=7, basis=FULL_TENSOR).dim == 64
    assert SystemSpec(n_atoms=3, n_max=7, basis=SYMMETRIC_DICKE).dim == 32
    assert SystemSpec.for_photons(2, n_atoms=2).n_max == 6


def test_invalid_specs():
    with pytest.raises(ValueError):
        SystemSpec(n_atoms=0)
    with pytest.raises(ValueError):
        SystemSpec(basis="product")
    with pytest.raises(ValueError):
        PulseSpec(sigma=0.0)


@pytest.mark.parametrize("basis", [FULL_TENSOR, SYMMETRIC_DICKE])
def test_hamiltonian_is_hermitian_without_losses(basis):
    h = Simulators.build_hamiltonian(SystemSpec(n_atoms=3, n_max=4, x1=0.99, V=0.3, basis=basis))
    assert linops.is_hermitian(h)


def test_dicke_levels():
    assert_allclose(Simulators.dicke_energies(2, 1.0, 0.3), [0.0, 1.3, 2.0])
    assert_allclose(Simulators.dicke_energies(3, 1.0, 0.3), [0.0, 1.6, 2.6, 3.0])


def test_full_tensor_battery_levels():
    h_b = Simulators.battery_hamiltonian(SystemSpec(n_atoms=2, x1=1.0 - 0.1j, V=0.3, basis=FULL_TENSOR))
    assert_allclose(np.linalg.eigvalsh(h_b), [0.0, 0.7, 1.3, 2.0], atol=1e-12)
    h_b = Simulators.battery_hamiltonian(SystemSpec(n_atoms=3, x1=1.0, V=0.3, basis=FULL_TENSOR))
    assert_allclose(np.linalg.eigvalsh(h_b), [0.0, 0.7, 0.7, 1.6, 1.7, 1.7, 2.6, 3.0], atol=1e-12)


def test_dicke_embedding_is_an_isometry():
    embedding = Simulators.dicke_embedding(3)
    assert_allclose(embedding.conj().T @ embedding, np.eye(4), atol=1e-12)
    raising_full = sum(Simulators._local(Simulators.SIGMA_PLUS, i, 3) for i in range(3))
    assert_allclose(raising_full @ embedding, embedding @ Simulators.dicke_raising(3), atol=1e-12)


def test_gpqe_transform_is_unitary():
    transform = Simulators.gpqe_transform(SystemSpec(n_atoms=2, basis=FULL_TENSOR))
    assert_allclose(transform @ transform.conj().T, np.eye(4), atol=1e-12)
    with pytest.raises(ValueError):
        Simulators.gpqe_transform(SystemSpec(n_atoms=3))


@pytest.mark.parametrize("n_atoms,photons,V", [(2, 2, 0.5), (3, 3, 0.2)])
def test_dicke_and_full_tensor_agree(n_atoms, photons, V):
    grid = make_grid(15.0, 61)
    populations = []
    energies = []
    for basis in (SYMMETRIC_DICKE, FULL_TENSOR):
        spec = SystemSpec.for_photons(photons, n_atoms=n_atoms, x1=0.99257 - 0.01j, J=0.5, V=V, basis=basis)
        states = Simulators.evolve_series(spec, Simulators.initial_state(spec, photons), grid)
        populations.append(Simulators.dicke_populations(spec, states))
        energies.append(Simulators.observables(spec, states, grid) + Simulators.observables(spec, states, grid, True))
    assert_allclose(populations[0], populations[1], atol=1e-8)
    for dicke, full in zip(*energies):
        assert_allclose(dicke.y, full.y, atol=1e-8)


def test_antisymmetric_state_stays_empty():
    spec = SystemSpec.for_photons(2, n_atoms=2, x1=0.99 - 0.05j, J=0.5, V=0.7, basis=FULL_TENSOR)
    states = Simulators.evolve_series(spec, Simulators.initial_state(spec, 2), make_grid(30.0, 121))
    transform = Simulators.gpqe_transform(spec)
    for rho in Simulators.battery_densities(spec, states):
        assert (transform @ rho @ transform.conj().T)[1, 1].real < 1e-10


def test_evolve_series_matches_evolve():
    spec = SystemSpec.for_photons(1, n_atoms=2, x1=0.95 - 0.02j, J=0.4, V=0.1)
    psi0 = Simulators.initial_state(spec, 1)
    grid = make_grid(8.0, 33)
    states = Simulators.evolve_series(spec, psi0, grid)
    assert_allclose(states[-1], Simulators.evolve(spec, psi0, 8.0), atol=1e-10)


def test_norm_decays_with_losses():
    spec = SystemSpec.for_photons(3, n_atoms=3, x1=0.99 - 0.05j, J=0.5)
    states = Simulators.evolve_series(spec, Simulators.initial_state(spec, 3), make_grid(20.0, 81))
    norms = np.linalg.norm(states, axis=1)
    assert norms[0] == pytest.approx(1.0)
    assert np.all(np.diff(norms) <= 1e-12)
    assert norms[-1] < 0.9


def test_excitation_number_is_conserved():
    spec = SystemSpec.for_photons(3, n_atoms=3, x1=1.0, J=0.5, V=0.2)
    states = Simulators.evolve_series(spec, Simulators.initial_state(spec, 3), make_grid(10.0, 41))
    weights = np.abs(states) ** 2
    assert_allclose(weights[:, Simulators.total_excitations(spec) != 3], 0.0, atol=1e-24)


def test_truncation_headroom():
    spec = SystemSpec(n_atoms=2, n_max=3, J=0.5)
    with pytest.raises(ValueError):
        Simulators.evolve(spec, Simulators.initial_state(spec, 2), 1.0)
    with pytest.raises(ValueError):
        Simulators.initial_state(spec, 4)


def test_dimension_overflow():
    spec = SystemSpec(n_atoms=12, n_max=1, basis=FULL_TENSOR)
    with pytest.raises(Simulators.DimensionOverflowError) as error:
        Simulators.build_hamiltonian(spec)
    assert error.value.suggested_n_max == 0


def test_state_shape_is_checked():
    spec = SystemSpec(n_atoms=1, n_max=5)
    with pytest.raises(linops.DimensionMismatchError):
        Simulators.evolve(spec, np.ones(3), 1.0)


@pytest.mark.parametrize("n_atoms", [2, 3])
def test_bare_and_dressed_battery_hamiltonians(n_atoms):
    spec = SystemSpec(n_atoms=n_atoms, n_max=0, x1=1.0, J=0.0, V=0.3)
    psi = np.zeros(spec.dim, dtype=complex)
    psi[1] = 1.0
    grid = np.array([0.0])
    # one symmetric excitation: e1 against the bare levels, e1 + (N - 1) V once the exchange is included
    energy, work = Simulators.observables(spec, [psi], grid)
    assert energy.y[0] == pytest.approx(1.0)
    assert work.y[0] == pytest.approx(1.0)
    energy, work = Simulators.observables(spec, [psi], grid, dressed=True)
    assert energy.y[0] == pytest.approx(1.0 + (n_atoms - 1) * 0.3)
    assert work.y[0] == pytest.approx(1.0 + (n_atoms - 1) * 0.3)


def test_observables_bounds():
    spec = SystemSpec.for_photons(3, n_atoms=3, x1=0.99 - 0.05j, J=0.5)
    grid = make_grid(30.0, 121)
    energy, work = Simulators.observables(spec, Simulators.evolve_series(spec, Simulators.initial_state(spec, 3), grid),
                                          grid)
    assert energy.y[0] == 0.0 and work.y[0] == 0.0
    assert np.all(work.y >= 0)
    assert np.all(work.y <= energy.y + 1e-12)
    assert np.max(work.y) > 0.5


# ---------------------------------------------------------------------------------------------------------------------
# driven evolution
# ---------------------------------------------------------------------------------------------------------------------

def test_rk4_on_a_linear_equation():
    grid = make_grid(2.0, 21)
    y = Simulators.rk4_propagate(lambda t, y: -0.7 * y, np.array([1.0]), grid, substeps=4)
    assert_allclose(y[:, 0].real, np.exp(-0.7 * grid), rtol=1e-8)


def test_resonant_pulse_area():
    spec = SystemSpec(n_atoms=1, n_max=0, x1=1.0, J=0.0)
    pulse = PulseSpec(Omega0=2.0, t_c=1.6, sigma=0.8)
    grid = make_grid(8.0, 1601)
    states = Simulators.evolve_pulsed(spec, pulse, Simulators.initial_state(spec, 0), grid)
    area = pulse.Omega0 * pulse.sigma * math.sqrt(math.pi / 2) * (
        erf((grid - pulse.t_c) / (pulse.sigma * math.sqrt(2))) - erf(-pulse.t_c / (pulse.sigma * math.sqrt(2))))
    assert_allclose(np.abs(states[:, 1]) ** 2, np.sin(area / 2) ** 2, atol=1e-6)


def test_undriven_pulse_matches_static_evolution():
    spec = SystemSpec.for_photons(1, n_atoms=1, x1=0.99 - 0.01j, J=0.5)
    psi0 = Simulators.initial_state(spec, 1)
    grid = make_grid(4.0, 501)
    driven = Simulators.evolve_pulsed(spec, PulseSpec(Omega0=0.0, omega_L=0.0), psi0, grid)
    assert_allclose(driven, Simulators.evolve_series(spec, psi0, grid), atol=1e-6)


def test_step_bound():
    spec = SystemSpec(n_atoms=2, n_max=0, x1=0.99, J=0.0, V=2.0)
    pulse = PulseSpec(Omega0=2.0, t_c=1.6, sigma=0.8)
    assert Simulators.step_bound(spec, pulse) == pytest.approx(0.005)
    with pytest.raises(Simulators.StepSizeError):
        Simulators.evolve_pulsed(spec, pulse, Simulators.initial_state(spec, 0), make_grid(8.0, 101))


def test_rotating_frame():
    frame = Simulators.rotating_frame(SystemSpec(omega=1.0, x1=0.99 - 0.01j), 0.99)
    assert frame.omega == pytest.approx(0.01)
    assert frame.x1 == pytest.approx(-0.01j)
    assert PulseSpec().drive_frequency(SystemSpec(x1=0.9 - 0.1j)) == pytest.approx(0.9)


def test_drive_dressed_levels():
    levels = Simulators.drive_dressed_levels(2.0, 0.1)
    assert_allclose(levels.exact, levels.perturbative, atol=1e-5)
    assert levels.splitting == pytest.approx(math.sqrt(4.0 + 0.01))
    assert Simulators.stark_shifted_energy(1.0, 2.0, 0.1) == pytest.approx(1.0 + 0.01 / 4.0, rel=1e-4)


def test_pulse_grid_needs_two_points():
    spec = SystemSpec(n_atoms=1, n_max=0, x1=1.0, J=0.0)
    with pytest.raises(ValueError, match="at least 2 points"):
        Simulators.evolve_pulsed(spec, PulseSpec(), Simulators.initial_state(spec, 0), np.array([0.0]))


def test_driven_levels_match_the_dressed_atom():
    spec = SystemSpec(n_atoms=1, n_max=0, x1=1.0 - 0.05j, J=0.0)
    pulse = PulseSpec(Omega0=0.5, omega_L=0.8)
    levels = Simulators.drive_dressed_levels(0.2, 0.5)
    assert_allclose(Simulators.driven_levels(spec, pulse), sorted(levels.exact), atol=1e-12)


def test_leakage_warning(caplog):
    spec = SystemSpec(n_atoms=1, n_max=5, x1=1.0, J=0.5)
    state = np.zeros(spec.dim, dtype=complex)
    state[-1] = 1.0
    with caplog.at_level(logging.WARNING, logger="Simulators"):
        assert Simulators._check_leakage(spec, state) == pytest.approx(1.0)
    assert "increase n_max" in caplog.text
