import logging
import math
from dataclasses import dataclass

import numpy as np

import linops
from ergotropy import ergotropy, ergotropy_series
from envelope import TimeSeries
from tools import ParameterSet, QbError

"""
Analytic charging dynamics of the effective battery:
    - a single battery in one cavity sector |n>|E1> <-> |n+1>|g> (dressed states),
    - N batteries sharing a single photon (Laplace-domain amplitudes),
    - N batteries in the collective bosonic limit (Holstein-Primakoff mode, Wei-Norman factorization).
"""

logger = logging.getLogger(__name__)


class SingularGaugeError(QbError, ValueError):
    pass


class BranchCutError(QbError, ValueError):
    pass


# ---------------------------------------------------------------------------------------------------------------------
# single battery, one cavity sector
# ---------------------------------------------------------------------------------------------------------------------

class JcParams(ParameterSet):
    """
    One battery coupled to the cavity inside the sector spanned by |n>|E1> and |n+1>|g>.

    Attributes
    ----------
    battery: EffectiveBattery
        two-level battery, its level energy x1 is complex when the excited level decays
    omega: float
        cavity frequency
    J: float
        coupling between the two sector states
    n: int
        photon number accompanying the excited battery
    """

    type = "jc"

    def __init__(self, battery, omega=1.0, J=0.5, n=0):
        self.battery = battery
        self.omega = float(omega)
        self.J = float(J)
        self.n = int(n)
        if self.J < 0:
            raise ValueError("J must be non-negative, got {}".format(self.J))
        if self.n < 0:
            raise ValueError("n must be non-negative, got {}".format(self.n))

    @property
    def x1(self):
        return complex(self.battery.x1)


@dataclass(frozen=True)
class DressedPair:
    lambda_plus: complex
    lambda_minus: complex
    c_plus: complex
    c_minus: complex
    d_plus: complex
    d_minus: complex

    @property
    def determinant(self):
        return self.c_minus * self.d_plus - self.c_plus * self.d_minus


def block_hamiltonian(p):
    """
    Sector Hamiltonian in absolute energies, basis (|n>|E1>, |n+1>|g>).
    """
    return np.array([[p.x1 + p.n * p.omega, p.J],
                     [p.J, (p.n + 1) * p.omega]], dtype=complex)


def _dressed_column(p, lam):
    # (J, lam - x1 - n omega) normalized by the square root of the sum of squares (not of moduli)
    c, d = p.J, lam - p.x1 - p.n * p.omega
    norm = np.sqrt(complex(d ** 2 + c ** 2))
    if abs(norm) > 1e-12 * max(1.0, abs(lam)):
        return c / norm, d / norm

    # the first form vanishes when the battery decouples; use the second row of the eigen-equation
    c, d = lam - (p.n + 1) * p.omega, p.J
    norm = np.sqrt(complex(c ** 2 + d ** 2))
    if abs(norm) > 1e-12 * max(1.0, abs(lam)):
        return c / norm, d / norm
    norm = math.hypot(abs(c), abs(d))
    return c / norm, d / norm


def dressed_pair(p):
    """
    Eigenenergies and eigenvectors of the sector Hamiltonian,
    lambda_pm = (x1 +- sqrt(4 J^2 + (omega - x1)^2)) / 2 + (n + 1/2) omega, principal square root.
    """
    x1, omega = p.x1, p.omega
    discriminant = complex(4 * p.J ** 2 + (omega - x1) ** 2)
    if discriminant.real < 0 and abs(discriminant.imag) <= 1e-9 * abs(discriminant):
        raise BranchCutError("dressed-state discriminant {} lies on the branch cut of the square root".format(
            discriminant))

    root = np.sqrt(discriminant)
    offset = (p.n + 0.5) * omega
    lambda_plus = 0.5 * (x1 + root) + offset
    lambda_minus = 0.5 * (x1 - root) + offset
    c_plus, d_plus = _dressed_column(p, lambda_plus)
    c_minus, d_minus = _dressed_column(p, lambda_minus)
    return DressedPair(lambda_plus=complex(lambda_plus), lambda_minus=complex(lambda_minus),
                       c_plus=complex(c_plus), c_minus=complex(c_minus),
                       d_plus=complex(d_plus), d_minus=complex(d_minus))


def _numerators(pair, alpha, beta, t):
    # D * U'(t) (alpha, beta), D = c- d+ - c+ d-
    cp, cm, dp, dm = pair.c_plus, pair.c_minus, pair.d_plus, pair.d_minus
    ep = np.exp(-1j * pair.lambda_plus * t)
    em = np.exp(-1j * pair.lambda_minus * t)
    excited = (cm * dp * em - cp * dm * ep) * alpha + cp * cm * (ep - em) * beta
    ground = dp * dm * (em - ep) * alpha + (cm * dp * ep - cp * dm * em) * beta
    return excited, ground


def _is_exceptional(pair):
    return abs(pair.determinant) < 1e-10


def _evolve_expm(p, alpha, beta, t):
    h = block_hamiltonian(p)
    psi0 = np.array([alpha, beta], dtype=complex)
    t = np.atleast_1d(t)
    return np.array([linops.expm(h, -1j * ti) @ psi0 for ti in t])


def evolve_pure(p, alpha, beta, t, renormalize=False):
    """
    Amplitudes on (|n>|E1>, |n+1>|g>) at time(s) t starting from alpha |n>|E1> + beta |n+1>|g>.

    Returns:
        (2,) array for a scalar t, (len(t), 2) array for a grid
    """
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    pair = dressed_pair(p)

    if _is_exceptional(pair):
        logger.debug("exceptional point in the sector Hamiltonian, falling back to expm")
        psi = _evolve_expm(p, alpha, beta, t)
    else:
        excited, ground = _numerators(pair, alpha, beta, np.atleast_1d(t))
        psi = np.stack([excited, ground], axis=-1) / pair.determinant

    if renormalize:
        psi = psi / np.linalg.norm(psi, axis=-1, keepdims=True)
    return psi[0] if scalar else psi


def m_elements(p, alpha, beta, t):
    """
    Returns:
        M11, M22 - squared moduli of the numerators of the excited and ground amplitudes
        weight - |c- d+ - c+ d-|^2, so that rho_B = diag(M11, M22) / weight
    """
    pair = dressed_pair(p)
    excited, ground = _numerators(pair, alpha, beta, np.asarray(t, dtype=float))
    return np.abs(excited) ** 2, np.abs(ground) ** 2, abs(pair.determinant) ** 2


def reduced_density(p, alpha, beta, t):
    """
    Battery density matrix in the (|E1>, |g>) basis. The two sector states carry different photon numbers,
    so the trace over the cavity leaves it diagonal.

    Returns:
        (2, 2) matrix for a scalar t, (len(t), 2, 2) for a grid
    """
    if _is_exceptional(dressed_pair(p)):
        psi = np.atleast_2d(evolve_pure(p, alpha, beta, t))
        populations = np.abs(psi) ** 2
    else:
        m11, m22, weight = m_elements(p, alpha, beta, np.atleast_1d(t))
        populations = np.stack([m11, m22], axis=-1) / weight

    rho = np.zeros(populations.shape + (2,), dtype=complex)
    rho[:, 0, 0] = populations[:, 0]
    rho[:, 1, 1] = populations[:, 1]
    return rho[0] if np.ndim(t) == 0 else rho


def battery_hamiltonian(x1):
    """Battery Hamiltonian diag(E1, 0) in the (|E1>, |g>) basis."""
    return np.diag([complex(x1).real, 0.0]).astype(complex)


def probability_series(p, alpha, beta, grid):
    rho = reduced_density(p, alpha, beta, grid)
    return (TimeSeries(grid, rho[:, 0, 0].real, "p_excited"),
            TimeSeries(grid, rho[:, 1, 1].real, "p_ground"))


def energy_and_ergotropy_series(p, alpha, beta, grid):
    """
    Battery energy Re(x1) <E1|rho_B|E1> and ergotropy along the grid.
    """
    rho = reduced_density(p, alpha, beta, grid)
    return ergotropy_series(rho, battery_hamiltonian(p.x1), grid)


# ---------------------------------------------------------------------------------------------------------------------
# N batteries sharing one photon
# ---------------------------------------------------------------------------------------------------------------------

@dataclass(frozen=True)
class SingleExcitationState:
    """
    c0 |1>|G> + sum_j c_j |0> sigma_j^+ |G> at time t.
    """
    c0: complex
    c: np.ndarray
    t: float

    @property
    def n_atoms(self):
        return len(self.c)


def poles(n_atoms, omega, x1, J):
    """
    Poles s_pm = -i [(omega + x1) +- sqrt((omega - x1)^2 + 4 N J^2)] / 2 of the photon / symmetric-atom pair.
    """
    root = np.sqrt(complex((omega - x1) ** 2 + 4 * n_atoms * J ** 2))
    return -0.5j * ((omega + x1) + root), -0.5j * ((omega + x1) - root)


def residues(n_atoms, omega, x1, J):
    """
    Returns:
        (A+, A-, B+, B-) such that c0(t) = A+ e^{s+ t} + A- e^{s- t} and c_j(t) = B+ e^{s+ t} + B- e^{s- t}
    """
    s_plus, s_minus = poles(n_atoms, omega, x1, J)
    gap = s_plus - s_minus
    a_plus = -1j * (1j * s_plus - x1) / gap
    a_minus = 1j * (1j * s_minus - x1) / gap
    b_plus = -1j * J / gap
    b_minus = 1j * J / gap
    return a_plus, a_minus, b_plus, b_minus


def _check_atoms(n_atoms, J):
    if n_atoms < 1:
        raise ValueError("at least one atom is needed, got {}".format(n_atoms))
    if J < 0:
        raise ValueError("J must be non-negative, got {}".format(J))


def amplitude_series(n_atoms, omega, x1, J, t):
    """
    Photon amplitude c0(t) and the common atomic amplitude c(t), starting from c0 = 1.
    """
    _check_atoms(n_atoms, J)
    t = np.asarray(t, dtype=float)
    s_plus, s_minus = poles(n_atoms, omega, x1, J)

    if abs(s_plus - s_minus) < 1e-10:
        # double pole: propagate the 2x2 mode Hamiltonian instead
        mode = np.array([[omega, n_atoms * J], [J, x1]], dtype=complex)
        psi = np.array([linops.expm(mode, -1j * ti)[:, 0] for ti in np.atleast_1d(t)])
        return psi[:, 0].reshape(t.shape), psi[:, 1].reshape(t.shape)

    a_plus, a_minus, b_plus, b_minus = residues(n_atoms, omega, x1, J)
    e_plus, e_minus = np.exp(s_plus * t), np.exp(s_minus * t)
    return a_plus * e_plus + a_minus * e_minus, b_plus * e_plus + b_minus * e_minus


def amplitudes(n_atoms, omega, x1, J, t):
    c0, c = amplitude_series(n_atoms, omega, x1, J, float(t))
    return SingleExcitationState(c0=complex(c0), c=np.full(n_atoms, complex(c)), t=float(t))


def battery_energy(n_atoms, omega, x1, J, grid):
    """
    E_B(t) = Re(x1) sum_j |c_j(t)|^2.
    """
    _, c = amplitude_series(n_atoms, omega, x1, J, grid)
    return TimeSeries(grid, complex(x1).real * n_atoms * np.abs(c) ** 2, "energy")


def reduced_density_n(state):
    """
    Atomic density matrix on span{|G>, sigma_j^+ |G>} after tracing out the cavity.
    """
    rho = np.zeros((state.n_atoms + 1, state.n_atoms + 1), dtype=complex)
    rho[0, 0] = abs(state.c0) ** 2
    rho[1:, 1:] = np.outer(state.c, state.c.conj())
    return rho


def single_excitation_hamiltonian(n_atoms, e1):
    return np.diag([0.0] + [complex(e1).real] * n_atoms).astype(complex)


def excitation_ergotropy_series(n_atoms, omega, x1, J, grid):
    """
    Energy and ergotropy of the N batteries while they absorb the photon.
    """
    c0, c = amplitude_series(n_atoms, omega, x1, J, grid)
    h_b = single_excitation_hamiltonian(n_atoms, x1)
    states = [SingleExcitationState(c0=c0[i], c=np.full(n_atoms, c[i]), t=t) for i, t in enumerate(grid)]
    return ergotropy_series([reduced_density_n(s) for s in states], h_b, grid)


# ---------------------------------------------------------------------------------------------------------------------
# collective bosonic limit
# ---------------------------------------------------------------------------------------------------------------------

@dataclass(frozen=True)
class WeiNormanGauge:
    g1: complex
    g2: complex
    g3: complex


@dataclass(frozen=True)
class CoherentPair:
    alpha_cavity: complex
    beta_atoms: complex


def hp_hamiltonian(n_atoms, omega, x1, J):
    """
    Beam-splitter parameters (omega, x1, J_N = J sqrt(N)) of the bosonized N-atom battery.
    """
    if n_atoms < 1:
        raise ValueError("at least one atom is needed, got {}".format(n_atoms))
    return omega, x1, J * math.sqrt(n_atoms)


def wn_gauge(J_N, t, policy=None):
    """
    Gauge functions of U_I(t) = exp(g1 a b^dag) exp(g2 a^dag b) exp(g3 (b^dag b - a^dag a)).
    """
    policy = policy or linops.DEFAULT_POLICY
    theta = J_N * t
    distance = abs((theta - 0.5 * math.pi) - math.pi * round((theta - 0.5 * math.pi) / math.pi))
    if distance < policy.gauge_singularity_tol:
        raise SingularGaugeError("J_N t = {:.9f} is at a singularity of the gauge; use coherent_evolution".format(theta))
    return WeiNormanGauge(g1=-1j * math.tan(theta),
                          g2=-0.5j * math.sin(2 * theta),
                          g3=-np.log(complex(math.cos(theta))))


def gauge_ode_residual(J_N, t, h=1e-5):
    """
    Largest residual of the three gauge equations, derivatives by central differences.
    """
    g = wn_gauge(J_N, t)
    before, after = wn_gauge(J_N, t - h), wn_gauge(J_N, t + h)
    dg1 = (after.g1 - before.g1) / (2 * h)
    dg2 = (after.g2 - before.g2) / (2 * h)
    dg3 = (after.g3 - before.g3) / (2 * h)
    residuals = [dg1 - dg2 * g.g1 ** 2 - dg3 * (2 * g.g1 + 2 * g.g1 ** 2 * g.g2) + 1j * J_N,
                 dg2 + 2 * dg3 * g.g2 + 1j * J_N,
                 dg2 * g.g1 + dg3 * (1 + 2 * g.g1 * g.g2)]
    return max(abs(r) for r in residuals)


def coherent_evolution(n_atoms, J_N, t):
    """
    Mean fields of |sqrt(N) cos(J_N t)>_cavity (x) |-i sqrt(N) sin(J_N t)>_atoms.
    """
    theta = J_N * t
    excitation = math.sin(theta) ** 2
    if excitation > 0.5:
        logger.warning("mean atomic excitation %.2f exceeds 0.5, the bosonic approximation degrades", excitation)
    return CoherentPair(alpha_cavity=complex(math.sqrt(n_atoms) * math.cos(theta)),
                        beta_atoms=-1j * math.sqrt(n_atoms) * math.sin(theta))


def fock_cutoff(n_atoms):
    """Truncation that keeps the tail of a coherent state of mean N below 1e-10."""
    return 10 + math.ceil(n_atoms + 6 * math.sqrt(n_atoms))


def annihilation(n_max):
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def two_mode_operators(n_max):
    """
    Returns:
        a, b - annihilation operators of the cavity and atomic modes on the product space (cavity first)
    """
    identity = np.eye(n_max + 1)
    lower = annihilation(n_max)
    return np.kron(lower, identity), np.kron(identity, lower)


def coherent_state(alpha, n_max):
    amplitudes = np.empty(n_max + 1, dtype=complex)
    amplitudes[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for k in range(1, n_max + 1):
        amplitudes[k] = amplitudes[k - 1] * alpha / math.sqrt(k)
    return amplitudes


def factorized_propagator(gauge, n_max):
    a, b = two_mode_operators(n_max)
    ad, bd = a.conj().T, b.conj().T
    return (linops.expm(a @ bd, gauge.g1)
            @ linops.expm(ad @ b, gauge.g2)
            @ linops.expm(bd @ b - ad @ a, gauge.g3))


def collective_series(n_atoms, x1, J, grid):
    """
    Energy Re(x1)|beta(t)|^2 and ergotropy of the truncated atomic coherent state.
    """
    _, _, J_N = hp_hamiltonian(n_atoms, 1.0, x1, J)
    e1 = complex(x1).real
    n_max = fock_cutoff(n_atoms)
    h_b = e1 * np.diag(np.arange(n_max + 1)).astype(complex)

    beta = -1j * math.sqrt(n_atoms) * np.sin(J_N * np.asarray(grid))
    if np.max(np.abs(beta) ** 2) / n_atoms > 0.5:
        logger.warning("mean atomic excitation exceeds 0.5 along the series, the bosonic approximation degrades")

    energy = TimeSeries(grid, e1 * np.abs(beta) ** 2, "energy")
    work = np.empty(len(grid))
    for i, b in enumerate(beta):
        state = coherent_state(b, n_max)
        work[i] = ergotropy(np.outer(state, state.conj()), h_b).ergotropy
    return energy, TimeSeries(grid, work, "ergotropy")
