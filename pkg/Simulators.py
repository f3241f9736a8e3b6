import logging
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

import linops
from Batteries import annihilation
from ergotropy import ergotropy_dicke, ergotropy_series
from envelope import TimeSeries
from tools import ParameterSet, QbError

"""
Numerical engine for cavity + N batteries: truncated Fock space for the cavity, either the full tensor
product of the atoms or their symmetric Dicke subspace, non-Hermitian Hamiltonians with dipole-dipole
exchange, propagation with expm (static) and RK4 (Gaussian drive).
"""

logger = logging.getLogger(__name__)

FULL_TENSOR = "full-tensor"
SYMMETRIC_DICKE = "symmetric-dicke"
BASES = (FULL_TENSOR, SYMMETRIC_DICKE)

# local atomic basis (|g>, |e>)
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)


class DimensionOverflowError(QbError, ValueError):
    def __init__(self, dim, limit, suggested_n_max):
        super().__init__("Hilbert space dimension {} exceeds {}; use n_max <= {}".format(dim, limit, suggested_n_max))
        self.suggested_n_max = suggested_n_max


class StepSizeError(QbError, ValueError):
    pass


class ConvergenceError(QbError):
    pass


class SystemSpec(ParameterSet):
    """
    Cavity mode truncated at n_max photons coupled to N identical batteries.

    Attributes
    ----------
    n_atoms: int
        number of batteries N
    n_max: int
        Fock truncation of the cavity (0 removes the cavity)
    omega: float
        cavity frequency
    x1: complex
        battery level energy, the imaginary part is the decay
    J: float
        battery-cavity coupling
    V: float
        dipole-dipole exchange between every pair of batteries
    basis: str
        "full-tensor" (2^N atomic states) or "symmetric-dicke" (N+1 Dicke states)
    """

    type = "system"

    def __init__(self, n_atoms=1, n_max=4, omega=1.0, x1=1.0, J=0.5, V=0.0, basis=SYMMETRIC_DICKE):
        self.n_atoms = int(n_atoms)
        self.n_max = int(n_max)
        self.omega = float(omega)
        self.x1 = complex(x1)
        self.J = float(J)
        self.V = float(V)
        self.basis = basis
        if self.n_atoms < 1:
            raise ValueError("at least one atom is needed, got {}".format(self.n_atoms))
        if self.n_max < 0:
            raise ValueError("n_max must be non-negative, got {}".format(self.n_max))
        if self.J < 0:
            raise ValueError("J must be non-negative, got {}".format(self.J))
        if basis not in BASES:
            raise ValueError("unknown basis {!r}, expected one of {}".format(basis, BASES))

    @classmethod
    def for_photons(cls, photons, **kwargs):
        """Spec with the default truncation headroom n_max = photons + 4."""
        return cls(n_max=int(photons) + 4, **kwargs)

    def replace(self, **changes):
        fields = dict(n_atoms=self.n_atoms, n_max=self.n_max, omega=self.omega, x1=self.x1, J=self.J, V=self.V,
                      basis=self.basis)
        fields.update(changes)
        return SystemSpec(**fields)

    @property
    def cavity_dim(self):
        return self.n_max + 1

    @property
    def atom_dim(self):
        return 2 ** self.n_atoms if self.basis == FULL_TENSOR else self.n_atoms + 1

    @property
    def dim(self):
        return self.cavity_dim * self.atom_dim

    @property
    def e1(self):
        return self.x1.real


class PulseSpec(ParameterSet):
    """
    Gaussian drive Omega(t) = Omega0 exp(-(t - t_c)^2 / 2 sigma^2) at frequency omega_L
    (None: resonant with the battery level).
    """

    type = "pulse"

    def __init__(self, Omega0=2.0, t_c=1.6, sigma=0.8, omega_L=None):
        self.Omega0 = float(Omega0)
        self.t_c = float(t_c)
        self.sigma = float(sigma)
        self.omega_L = None if omega_L is None else float(omega_L)
        if not self.sigma > 0:
            raise ValueError("sigma must be positive, got {}".format(self.sigma))
        if self.Omega0 < 0:
            raise ValueError("Omega0 must be non-negative, got {}".format(self.Omega0))

    def rabi(self, t):
        return self.Omega0 * np.exp(-(np.asarray(t) - self.t_c) ** 2 / (2 * self.sigma ** 2))

    def drive_frequency(self, spec):
        return spec.e1 if self.omega_L is None else self.omega_L


# ---------------------------------------------------------------------------------------------------------------------
# atomic operators
# ---------------------------------------------------------------------------------------------------------------------

def dicke_energies(n_atoms, e1, V):
    """
    Levels k e1 + k (N - k) V of the symmetric states with k excitations, k = 0..N.
    """
    k = np.arange(n_atoms + 1)
    return k * e1 + k * (n_atoms - k) * V


def dicke_raising(n_atoms):
    """Collective raising operator on the Dicke states: <k+1|S+|k> = sqrt((k+1)(N-k))."""
    k = np.arange(n_atoms)
    return np.diag(np.sqrt((k + 1) * (n_atoms - k)), k=-1).astype(complex)


def _local(op, i, n_atoms):
    ops = [np.eye(2, dtype=complex)] * n_atoms
    ops[i] = op
    return linops.kron_all(ops)


def excitation_numbers(n_atoms):
    """Number of excited atoms for every full-tensor basis state (atom 0 is the most significant bit)."""
    return np.array([bin(index).count("1") for index in range(2 ** n_atoms)])


def dicke_embedding(n_atoms):
    """
    Isometry whose column k is the normalized symmetric state with k excitations in the full tensor basis.
    """
    counts = excitation_numbers(n_atoms)
    embedding = np.zeros((2 ** n_atoms, n_atoms + 1), dtype=complex)
    for k in range(n_atoms + 1):
        members = counts == k
        embedding[members, k] = 1.0 / math.sqrt(members.sum())
    return embedding


def _atomic_operators(spec, x1):
    """
    Returns:
        h_atoms - battery Hamiltonian with level energy x1 on the atomic factor
        raising - collective raising operator sum_i sigma_i^+
    """
    n = spec.n_atoms
    if spec.basis == SYMMETRIC_DICKE:
        return np.diag(dicke_energies(n, x1, spec.V)).astype(complex), dicke_raising(n)

    raising_ops = [_local(SIGMA_PLUS, i, n) for i in range(n)]
    h_atoms = x1 * np.diag(excitation_numbers(n)).astype(complex)
    for i, j in combinations(range(n), 2):
        exchange = raising_ops[i] @ raising_ops[j].conj().T
        h_atoms += spec.V * (exchange + exchange.conj().T)
    return h_atoms, sum(raising_ops)


def battery_hamiltonian(spec):
    """
    Hermitian battery Hamiltonian (level energy Re x1) on the atomic factor.
    """
    h_atoms, _ = _atomic_operators(spec, spec.e1)
    return h_atoms


def gpqe_transform(spec):
    """
    Rows: |G>, |p> (antisymmetric), |q> (symmetric), |E> of two atoms expressed in the basis of spec.
    """
    if spec.n_atoms != 2:
        raise ValueError("the {G, p, q, E} basis is defined for two atoms")
    if spec.basis == SYMMETRIC_DICKE:
        transform = np.zeros((4, 3), dtype=complex)
        transform[0, 0] = transform[2, 1] = transform[3, 2] = 1.0
        return transform
    s = 1.0 / math.sqrt(2)
    return np.array([[1, 0, 0, 0],
                     [0, s, -s, 0],
                     [0, s, s, 0],
                     [0, 0, 0, 1]], dtype=complex)


# ---------------------------------------------------------------------------------------------------------------------
# Hamiltonians and states
# ---------------------------------------------------------------------------------------------------------------------

def _check_dimension(spec, policy):
    if spec.dim > policy.max_dim_expm:
        suggested = max(0, policy.max_dim_expm // spec.atom_dim - 1)
        raise DimensionOverflowError(spec.dim, policy.max_dim_expm, suggested)


def build_hamiltonian(spec, policy=None):
    """
    H = omega a^dag a + H_B + J sum_i (a sigma_i^+ + a^dag sigma_i^-), index = photons * atom_dim + atoms.
    """
    policy = policy or linops.DEFAULT_POLICY
    _check_dimension(spec, policy)

    a = annihilation(spec.n_max)
    h_atoms, raising = _atomic_operators(spec, spec.x1)
    identity_cavity = np.eye(spec.cavity_dim)
    identity_atoms = np.eye(spec.atom_dim)

    h = spec.omega * np.kron(a.conj().T @ a, identity_atoms) + np.kron(identity_cavity, h_atoms)
    coupling = np.kron(a, raising)
    return h + spec.J * (coupling + coupling.conj().T)


def drive_operator(spec):
    """sum_i (sigma_i^+ + sigma_i^-) on the full space."""
    _, raising = _atomic_operators(spec, spec.x1)
    return np.kron(np.eye(spec.cavity_dim), raising + raising.conj().T)


def photon_numbers(spec):
    return np.repeat(np.arange(spec.cavity_dim), spec.atom_dim)


def total_excitations(spec):
    atoms = np.arange(spec.atom_dim) if spec.basis == SYMMETRIC_DICKE else excitation_numbers(spec.n_atoms)
    return photon_numbers(spec) + np.tile(atoms, spec.cavity_dim)


def initial_state(spec, photons, excitations=0):
    """
    |photons> (x) symmetric atomic state with the given number of excitations.
    """
    if not 0 <= photons <= spec.n_max:
        raise ValueError("{} photons do not fit below n_max = {}".format(photons, spec.n_max))
    if not 0 <= excitations <= spec.n_atoms:
        raise ValueError("{} excitations for {} atoms".format(excitations, spec.n_atoms))
    cavity = np.zeros(spec.cavity_dim, dtype=complex)
    cavity[photons] = 1.0
    if spec.basis == SYMMETRIC_DICKE:
        atoms = np.zeros(spec.atom_dim, dtype=complex)
        atoms[excitations] = 1.0
    else:
        atoms = dicke_embedding(spec.n_atoms)[:, excitations]
    return np.kron(cavity, atoms)


def _check_state(spec, psi0):
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (spec.dim,):
        raise linops.DimensionMismatchError("state has shape {}, expected ({},)".format(psi0.shape, spec.dim))
    if spec.J != 0:
        occupied = np.abs(psi0) > 0
        needed = int(total_excitations(spec)[occupied].max()) + 4 if occupied.any() else 4
        if spec.n_max < needed:
            raise ValueError("n_max = {} leaves no truncation headroom, use at least {}".format(spec.n_max, needed))
    return psi0


def _check_leakage(spec, states):
    if spec.J == 0 or spec.n_max < 2:
        return 0.0
    top = photon_numbers(spec) >= spec.n_max - 1
    leakage = float(np.max(np.sum(np.abs(np.atleast_2d(states)[:, top]) ** 2, axis=1)))
    if leakage > 1e-6:
        logger.warning("population %.2e in the two highest Fock levels, increase n_max", leakage)
    return leakage


def evolve(spec, psi0, t, policy=None):
    """
    e^{-iHt} psi0.
    """
    psi0 = _check_state(spec, psi0)
    psi = linops.expm(build_hamiltonian(spec, policy), -1j * t, policy=policy) @ psi0
    _check_leakage(spec, psi)
    return psi


def evolve_series(spec, psi0, grid, policy=None):
    """
    States on a uniform grid, propagated with the one-step propagator.
    Returns:
        (len(grid), dim) array
    """
    psi0 = _check_state(spec, psi0)
    grid = np.asarray(grid, dtype=float)
    h = build_hamiltonian(spec, policy)
    states = np.empty((len(grid), spec.dim), dtype=complex)
    states[0] = linops.expm(h, -1j * grid[0], policy=policy) @ psi0 if grid[0] != 0 else psi0
    if len(grid) > 1:
        step = linops.expm(h, -1j * (grid[1] - grid[0]), policy=policy)
        for i in range(1, len(grid)):
            states[i] = step @ states[i - 1]
    _check_leakage(spec, states)
    return states


# ---------------------------------------------------------------------------------------------------------------------
# driven evolution
# ---------------------------------------------------------------------------------------------------------------------

def rk4_step(y, rhs, t, h):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_propagate(rhs, y0, grid, substeps=1):
    """
    Fixed-step RK4 integration of dy/dt = rhs(t, y), substeps steps per grid interval.
    Returns:
        array of shape (len(grid),) + y0.shape
    """
    grid = np.asarray(grid, dtype=float)
    y = np.array(y0, dtype=complex)
    out = np.empty((len(grid),) + y.shape, dtype=complex)
    out[0] = y
    for i in range(1, len(grid)):
        h = (grid[i] - grid[i - 1]) / substeps
        t = grid[i - 1]
        for k in range(substeps):
            y = rk4_step(y, rhs, t + k * h, h)
        out[i] = y
    return out


def rotating_frame(spec, omega_L):
    """Spec seen in the frame rotating at omega_L for both the cavity and the batteries."""
    return spec.replace(omega=spec.omega - omega_L, x1=spec.x1 - omega_L)


def step_bound(spec, pulse, policy=None):
    """
    Largest RK4 step accepted: min(0.01 / Omega0, 0.01 sigma, 0.05 / max|H|).
    """
    frame = rotating_frame(spec, pulse.drive_frequency(spec))
    h_max = np.max(np.abs(build_hamiltonian(frame, policy) + 0.5 * pulse.Omega0 * drive_operator(frame)))
    bounds = [0.01 * pulse.sigma]
    if pulse.Omega0 > 0:
        bounds.append(0.01 / pulse.Omega0)
    if h_max > 0:
        bounds.append(0.05 / h_max)
    return min(bounds)


def evolve_pulsed(spec, pulse, psi0, grid, substeps=1, check_convergence=True, policy=None):
    """
    RK4 evolution under H_frame + Omega(t)/2 sum_i (sigma_i^+ + sigma_i^-) in the frame rotating at omega_L.

    The run is repeated with twice as many steps and the final states must agree to 1e-6.
    Returns:
        (len(grid), dim) array of states in the rotating frame
    """
    psi0 = _check_state(spec, psi0)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("the pulse grid needs at least 2 points, got shape {}".format(grid.shape))
    frame = rotating_frame(spec, pulse.drive_frequency(spec))
    h_static = build_hamiltonian(frame, policy)
    drive = drive_operator(frame)

    h = (grid[1] - grid[0]) / substeps
    bound = step_bound(spec, pulse, policy)
    if h > bound * (1 + 1e-9):
        raise StepSizeError("RK4 step {:.3e} exceeds the bound {:.3e}".format(h, bound))

    def rhs(t, psi):
        return -1j * ((h_static + 0.5 * pulse.rabi(t) * drive) @ psi)

    states = rk4_propagate(rhs, psi0, grid, substeps)
    if check_convergence:
        refined = rk4_propagate(rhs, psi0, grid, 2 * substeps)
        deviation = float(np.max(np.abs(refined[-1] - states[-1])))
        if deviation > 1e-6:
            raise ConvergenceError("halving the RK4 step moves the final state by {:.3e}".format(deviation))
        logger.debug("RK4 convergence gate passed, deviation %.2e", deviation)
    _check_leakage(spec, states)
    return states


@dataclass(frozen=True)
class DriveLevels:
    """
    Dressed levels of a two-level atom under a static drive, detuning delta_L and Rabi frequency Omega.
    """
    delta_L: float
    Omega: float

    @property
    def exact(self):
        root = math.sqrt(self.delta_L ** 2 + self.Omega ** 2)
        return 0.5 * (self.delta_L + root), 0.5 * (self.delta_L - root)

    @property
    def perturbative(self):
        shift = self.Omega ** 2 / (4 * self.delta_L)
        return self.delta_L + shift, -shift

    @property
    def splitting(self):
        upper, lower = self.exact
        return upper - lower


def drive_dressed_levels(delta_L, Omega):
    return DriveLevels(delta_L=float(delta_L), Omega=float(Omega))


def stark_shifted_energy(e1, delta_L, Omega):
    """
    Battery level after the drive: e1 moved by the change of the exact level splitting,
    which is Omega^2 / 2 delta_L to leading order.
    """
    levels = drive_dressed_levels(delta_L, Omega)
    return e1 + math.copysign(levels.splitting, delta_L) - delta_L


def driven_levels(spec, pulse, policy=None):
    """
    Eigenvalues of the Hermitian frame Hamiltonian with the drive held at its peak Omega0, ascending.
    """
    frame = rotating_frame(spec.replace(x1=spec.e1), pulse.drive_frequency(spec))
    return np.linalg.eigvalsh(build_hamiltonian(frame, policy) + 0.5 * pulse.Omega0 * drive_operator(frame))


# ---------------------------------------------------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------------------------------------------------

def battery_densities(spec, states):
    """Reduced density matrices of the batteries, cavity traced out."""
    dims = (spec.cavity_dim, spec.atom_dim)
    return np.array([linops.partial_trace(np.outer(psi, psi.conj()), dims, keep="B") for psi in states])


def dicke_populations(spec, states):
    """
    Population of every symmetric state |D_k>, summed over photon numbers.
    Returns:
        (len(states), N+1) array
    """
    amplitudes = np.asarray(states).reshape(len(states), spec.cavity_dim, spec.atom_dim)
    if spec.basis == FULL_TENSOR:
        amplitudes = amplitudes @ dicke_embedding(spec.n_atoms).conj()
    return np.sum(np.abs(amplitudes) ** 2, axis=1)


def observables(spec, states, grid, dressed=False):
    """
    Energy and ergotropy of the batteries along a sequence of states.

    The ergotropy is measured against the bare H_B = e1 sum_i sigma_i^+ sigma_i^-, V only acting on the
    dynamics. With dressed set, H_B includes the dipole exchange. Two atoms are evaluated in the
    {|G>, |p>, |q>, |E>} basis.
    """
    rhos = battery_densities(spec, states)
    coupling = spec.V if dressed else 0.0
    if spec.n_atoms == 2:
        transform = gpqe_transform(spec)
        reports = [ergotropy_dicke(transform @ rho @ transform.conj().T, spec.e1, coupling) for rho in rhos]
        return (TimeSeries(grid, [r.energy for r in reports], "energy"),
                TimeSeries(grid, [r.ergotropy for r in reports], "ergotropy"))

    # the passive state may use the non-symmetric levels, so W is taken on the full atomic space
    if spec.basis == SYMMETRIC_DICKE:
        embedding = dicke_embedding(spec.n_atoms)
        rhos = embedding @ rhos @ embedding.conj().T
        spec = spec.replace(basis=FULL_TENSOR)
    return ergotropy_series(rhos, battery_hamiltonian(spec.replace(V=coupling)), grid)
