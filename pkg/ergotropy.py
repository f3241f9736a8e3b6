import logging
from dataclasses import dataclass

import numpy as np

import linops
from envelope import TimeSeries
from tools import QbError

logger = logging.getLogger(__name__)


class NegativePopulationError(QbError, ValueError):
    pass


@dataclass(frozen=True)
class ErgotropyReport:
    energy: float
    passive_energy: float
    ergotropy: float


def _check_hermitian(a, policy):
    # density matrices built from sums of outer products carry rounding at the 1e-15 level
    if not linops.is_hermitian(a, tol=max(policy.hermitian_tol, 1e-10), policy=policy):
        raise linops.NotHermitianError(linops.hermiticity_defect(a))
    return 0.5 * (a + a.conj().T)


def ergotropy(rho_b, h_b, normalize=False, policy=None):
    """
    Energy, passive energy and ergotropy of a battery state.

    The eigenvalues of rho_b sorted in descending order are paired with the eigenvalues of h_b sorted
    in ascending order. The trace of rho_b is used as is (it decays under non-Hermitian evolution)
    unless normalize is set.
    """
    policy = policy or linops.DEFAULT_POLICY
    rho_b = _check_hermitian(linops.as_matrix(rho_b), policy)
    h_b = _check_hermitian(linops.as_matrix(h_b), policy)
    if rho_b.shape != h_b.shape:
        raise linops.DimensionMismatchError("rho_b {} and h_b {} differ in shape".format(rho_b.shape, h_b.shape))

    if normalize:
        trace = np.trace(rho_b).real
        if trace <= 0:
            raise NegativePopulationError("cannot normalize a state of trace {}".format(trace))
        rho_b = rho_b / trace

    populations = np.linalg.eigvalsh(rho_b)
    if populations.min() < -policy.negative_population_tol:
        raise NegativePopulationError("rho_b has eigenvalue {:.3e}".format(populations.min()))
    populations = np.clip(populations, 0.0, None)[::-1]
    levels = np.linalg.eigvalsh(h_b)

    energy = float(np.real(np.trace(rho_b @ h_b)))
    passive_energy = float(np.dot(populations, levels))
    work = energy - passive_energy
    if -policy.negative_population_tol < work < 0.0:
        # rounding only: the passive state is the state itself
        work, passive_energy = 0.0, energy
    return ErgotropyReport(energy=energy, passive_energy=passive_energy, ergotropy=work)


def dicke_hamiltonian_2(e1, v):
    """
    Two-atom battery Hamiltonian in the {|G>, |p>, |q>, |E>} basis.
    """
    return np.diag([0.0, e1 - v, e1 + v, 2.0 * e1]).astype(complex)


def ergotropy_dicke(rho_b, e1, v, policy=None):
    """
    Ergotropy of a two-atom state given in the {|G>, |p>, |q>, |E>} basis.
    """
    rho_b = linops.as_matrix(rho_b)
    if rho_b.shape != (4, 4):
        raise linops.DimensionMismatchError("ergotropy_dicke expects a 4x4 matrix, got {}".format(rho_b.shape))
    return ergotropy(rho_b, dicke_hamiltonian_2(e1, v), policy=policy)


def ergotropy_series(rhos, h_b, grid, policy=None):
    """
    Energy and ergotropy along a sequence of battery states sampled on grid.
    Returns:
        (energy, ergotropy) TimeSeries pair
    """
    reports = [ergotropy(rho, h_b, policy=policy) for rho in rhos]
    energy = TimeSeries(grid, [r.energy for r in reports], "energy")
    work = TimeSeries(grid, [r.ergotropy for r in reports], "ergotropy")
    return energy, work
