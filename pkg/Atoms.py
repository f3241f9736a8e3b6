import logging
from dataclasses import dataclass

import numpy as np

import linops
from tools import ParameterSet, QbError

"""
Three-level EIT atom (|d>, |e>, |m>) driven by two fields and damped on |d>.
The module builds the non-Hermitian effective Hamiltonian, diagonalizes it exactly and perturbatively,
and reduces it to the effective two-level battery made of the ground state and the dark state |E1>.
"""

logger = logging.getLogger(__name__)

# basis order of every 3-vector in this module
BASIS = ("d", "e", "m")


class PerturbationError(QbError, ValueError):
    pass


class EitParams(ParameterSet):
    """
    Physical inputs of the EIT model, in units of the cavity frequency omega.

    Attributes
    ----------
    omega_d, omega_e, omega_m: float
        level energies
    Omega1, Omega2: float
        Rabi frequencies of the |d>-|e> and |e>-|m> transitions
    omega_a, omega_b: float
        drive frequencies; omega_c = omega_a - omega_b is derived
    kappa: float
        decay rate of |d>
    """

    type = "eit"

    def __init__(self, omega_d=0.25, omega_e=1.0, omega_m=0.5, Omega1=50.0, Omega2=5.0,
                 omega_a=1.0, omega_b=0.5, kappa=0.05):
        self.omega_d = float(omega_d)
        self.omega_e = float(omega_e)
        self.omega_m = float(omega_m)
        self.Omega1 = float(Omega1)
        self.Omega2 = float(Omega2)
        self.omega_a = float(omega_a)
        self.omega_b = float(omega_b)
        self.kappa = float(kappa)
        self.validate()

    def validate(self):
        if not self.Omega1 > 0:
            raise ValueError("Omega1 must be positive, got {}".format(self.Omega1))
        if self.Omega2 < 0:
            raise ValueError("Omega2 must be non-negative, got {}".format(self.Omega2))
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative, got {}".format(self.kappa))
        values = [self.omega_d, self.omega_e, self.omega_m, self.omega_a, self.omega_b]
        if not np.all(np.isfinite(values)):
            raise ValueError("level and drive frequencies must be finite")

    @property
    def omega_c(self):
        return self.omega_a - self.omega_b

    @property
    def Omega(self):
        return float(np.hypot(self.Omega1, self.Omega2))

    @property
    def omega1(self):
        return complex(self.omega_e + self.omega_a - self.omega_d, self.kappa)

    @property
    def omega2(self):
        return complex(self.omega_m + self.omega_c - self.omega_d, self.kappa)

    def replace(self, **changes):
        """
        Returns a copy with some fields changed. omega_c is accepted and applied by moving omega_a.
        """
        fields = {key: getattr(self, key) for key in
                  ("omega_d", "omega_e", "omega_m", "Omega1", "Omega2", "omega_a", "omega_b", "kappa")}
        omega_c = changes.pop("omega_c", None)
        fields.update(changes)
        if omega_c is not None:
            fields["omega_a"] = fields["omega_b"] + omega_c
        return EitParams(**fields)

    def with_omega_c(self, omega_c):
        return self.replace(omega_c=omega_c)

    def as_dict(self):
        serializable_dict = super().as_dict()
        serializable_dict["omega_c"] = self.omega_c
        return serializable_dict


@dataclass(frozen=True)
class EitSpectrum:
    """
    Eigenvalues x'_j of the effective Hamiltonian and the matching eigenvectors (columns of states)
    in the (|d>, |e>, |m>) basis. dark_index points at |E1>.
    """
    x: np.ndarray
    states: np.ndarray
    dark_index: int
    degenerate: bool = False

    @property
    def dark_value(self):
        return complex(self.x[self.dark_index])

    @property
    def dark_state(self):
        return self.states[:, self.dark_index]

    @property
    def bright_indices(self):
        return [j for j in range(3) if j != self.dark_index]


@dataclass(frozen=True)
class EffectiveBattery:
    """
    Two-level battery |g> <-> |E1> with complex level energy x1.
    """
    x1: complex
    dark_state: np.ndarray
    with_eit: bool = True

    @property
    def energy(self):
        return float(self.x1.real)

    @property
    def gamma(self):
        return max(0.0, -float(self.x1.imag))


def build_h0(p):
    """
    3x3 Hamiltonian H0 = H'_eff - (omega_d - i kappa) I in the (|d>, |e>, |m>) basis.
    """
    return np.array([[0.0, p.Omega1, 0.0],
                     [p.Omega1, p.omega1, p.Omega2],
                     [0.0, p.Omega2, p.omega2]], dtype=complex)


def cubic_residual(p, x):
    """
    Characteristic polynomial of H0 (up to sign) evaluated at x.
    """
    w1, w2 = p.omega1, p.omega2
    return x * (x ** 2 - (w1 + w2) * x + w1 * w2 - p.Omega ** 2) + p.Omega1 ** 2 * w2


def _shift(p):
    return complex(p.omega_d, -p.kappa)


def _select_dark(x, states, policy):
    # two eigenvalues closer than the degeneracy tolerance
    gaps = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(gaps, np.inf)
    degenerate = bool(np.min(gaps) < policy.degeneracy_tol)

    e_weight = np.abs(states[1, :])
    if degenerate:
        return int(np.argmin(e_weight)), True

    # smallest decay first, ties (e.g. kappa = 0) broken by the weight on |e>
    decay = np.abs(x.imag)
    tied = np.flatnonzero(decay <= decay.min() + policy.degeneracy_tol)
    if len(tied) > 1:
        return int(tied[np.argmin(e_weight[tied])]), False
    return int(tied[0]), False


def spectrum_exact(p, policy=None):
    """
    Exact eigenstructure of the EIT Hamiltonian.
    """
    policy = policy or linops.DEFAULT_POLICY
    eigen = linops.eig_general(build_h0(p), policy=policy)
    x = eigen.values + _shift(p)
    x = np.where(np.abs(x.imag) < policy.zero_tol, x.real + 0j, x)
    dark_index, degenerate = _select_dark(x, eigen.vectors, policy)
    if degenerate:
        logger.warning("degenerate EIT spectrum; dark state chosen by its weight on |e>")
    return EitSpectrum(x=x, states=eigen.vectors, dark_index=dark_index, degenerate=degenerate)


def zeroth_order_states(p):
    """
    Eigenvectors of H0 when omega1 = omega2 = 0: columns are the dark state and the two bright states (+Omega, -Omega).
    """
    Omega = p.Omega
    if Omega == 0:
        raise PerturbationError("Omega = 0: the drive does not couple the levels")
    dark = np.array([-p.Omega2, 0.0, p.Omega1]) / Omega
    plus = np.array([p.Omega1, Omega, p.Omega2]) / (np.sqrt(2) * Omega)
    minus = np.array([p.Omega1, -Omega, p.Omega2]) / (np.sqrt(2) * Omega)
    return np.stack([dark, plus, minus], axis=1).astype(complex)


def first_order_state(p, x):
    """
    Eigenvector of H0 for eigenvalue x, [(x - w1)(x - w2) - Omega2^2, Omega1 (x - w2), Omega1 Omega2] / N,
    with N^2 the sum of the squared moduli. Returns None when the vector vanishes.
    """
    w1, w2 = p.omega1, p.omega2
    v = np.array([(x - w1) * (x - w2) - p.Omega2 ** 2, p.Omega1 * (x - w2), p.Omega1 * p.Omega2], dtype=complex)
    norm = np.sqrt(np.sum(np.abs(v) ** 2))
    if norm < 1e-12 * max(1.0, p.Omega ** 2):
        return None
    return v / norm


def spectrum_perturbative(p):
    """
    First-order eigenvalues for Omega >> |omega1|, |omega2|, ordered (dark, +Omega, -Omega).
    """
    Omega = p.Omega
    if Omega == 0:
        raise PerturbationError("Omega = 0: perturbation theory around the driven levels is undefined")
    w1, w2 = p.omega1, p.omega2
    ratio = max(abs(w1), abs(w2)) / Omega
    if ratio > 0.2:
        logger.warning("perturbative spectrum outside its range of validity: max(|w1|, |w2|) / Omega = %.3f", ratio)

    dark_weight = p.Omega1 ** 2 / Omega ** 2
    bright_weight = p.Omega2 ** 2 / Omega ** 2
    x_h0 = np.array([dark_weight * w2,
                     Omega + 0.5 * (w1 + bright_weight * w2),
                     -Omega + 0.5 * (w1 + bright_weight * w2)])

    # first-order vectors, falling back to zeroth order where the formula degenerates
    zeroth = zeroth_order_states(p)
    states = np.empty((3, 3), dtype=complex)
    for j, x in enumerate(x_h0):
        v = first_order_state(p, x)
        states[:, j] = zeroth[:, j] if v is None else v

    x = x_h0 + _shift(p)
    if p.Omega2 == 0:
        x[0] = complex(p.omega_m + p.omega_c, 0.0)
    return EitSpectrum(x=x, states=states, dark_index=0)


def effective_battery(p, with_eit=True, policy=None):
    """
    Effective two-level battery. With EIT the excited level is the dark state of the exact spectrum,
    without EIT it is the bare |e> level with the full decay kappa.
    """
    if with_eit:
        spectrum = spectrum_exact(p, policy=policy)
        return EffectiveBattery(x1=spectrum.dark_value, dark_state=spectrum.dark_state, with_eit=True)
    return EffectiveBattery(x1=complex(p.omega_e, -p.kappa), dark_state=np.array([0, 1, 0], dtype=complex),
                            with_eit=False)


def sweep_omega_c(p, omega_a_range, policy=None):
    """
    Battery energy Re(x1') while omega_a is varied at fixed omega_b.
    Returns:
        list of (omega_c, energy)
    """
    table = []
    for omega_a in omega_a_range:
        battery = effective_battery(p.replace(omega_a=float(omega_a)), with_eit=True, policy=policy)
        table.append((float(omega_a) - p.omega_b, battery.energy))
    return table
