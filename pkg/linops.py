import logging
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg

from tools import QbError

"""
Dense complex linear algebra shared by the battery models: Hermitian and general eigendecompositions
of small matrices, matrix exponentials and partial traces over a bipartite split.
"""

logger = logging.getLogger(__name__)


class NotHermitianError(QbError, ValueError):
    def __init__(self, defect):
        super().__init__("matrix is not Hermitian: max|A - A^dagger| = {:.3e}".format(defect))
        self.defect = defect


class DefectiveMatrixError(QbError):
    pass


class ExpmOverflowError(QbError, OverflowError):
    def __init__(self, norm):
        super().__init__("matrix exponential overflow: |scale * a|_1 = {:.3e}".format(norm))
        self.norm = norm


class DimensionMismatchError(QbError, ValueError):
    pass


@dataclass(frozen=True)
class NumericPolicy:
    """
    Tolerances used across the simulation.

    Attributes
    ----------
    hermitian_tol: float
        relative bound on max|A - A^dagger| for a matrix treated as Hermitian
    general_residual_tol: float
        relative bound on |A v - lambda v| for general eigenpairs
    defect_condition: float
        eigenvector matrices with a larger condition number are treated as defective
    degeneracy_tol: float
        eigenvalues closer than this are treated as degenerate
    zero_tol: float
        imaginary parts below this are treated as exactly zero
    negative_population_tol: float
        density-matrix eigenvalues in [-tol, 0) are clamped to 0
    max_dim_general: int
        largest matrix accepted by eig_general
    max_dim_expm: int
        largest matrix accepted by expm and by the Fock-space builder
    expm_max_norm: float
        largest 1-norm of scale * a accepted by expm
    gauge_singularity_tol: float
        distance to J_N t = pi/2 (mod pi) below which the Wei-Norman gauge is rejected
    """
    hermitian_tol: float = 1e-12
    general_residual_tol: float = 1e-9
    defect_condition: float = 1e12
    degeneracy_tol: float = 1e-9
    zero_tol: float = 1e-12
    negative_population_tol: float = 1e-9
    max_dim_general: int = 64
    max_dim_expm: int = 4096
    expm_max_norm: float = 1e5
    gauge_singularity_tol: float = 1e-6


DEFAULT_POLICY = NumericPolicy()


@dataclass(frozen=True)
class EigenSystem:
    """
    Eigenvalues and unit-norm right eigenvectors; vectors[:, i] belongs to values[i].
    """
    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        """Returns sum_i lambda_i v_i v_i^dagger (meaningful for Hermitian inputs)."""
        return (self.vectors * self.values) @ self.vectors.conj().T


def as_matrix(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError("expected a square matrix, got shape {}".format(a.shape))
    return a


def hermiticity_defect(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def is_hermitian(a, tol=None, policy=None):
    policy = policy or DEFAULT_POLICY
    tol = policy.hermitian_tol if tol is None else tol
    a = np.asarray(a)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    return hermiticity_defect(a) <= tol * scale


def eig_hermitian(a, policy=None):
    """
    Eigendecomposition of a Hermitian matrix.
    Returns an EigenSystem with real eigenvalues sorted ascending and orthonormal eigenvectors.
    """
    policy = policy or DEFAULT_POLICY
    a = as_matrix(a)
    if not is_hermitian(a, policy=policy):
        raise NotHermitianError(hermiticity_defect(a))

    # symmetrize away rounding before handing over to LAPACK
    values, vectors = scipy.linalg.eigh(0.5 * (a + a.conj().T))
    return EigenSystem(values=values.astype(float), vectors=vectors)


def eig_general(a, policy=None):
    """
    Right eigenpairs of an arbitrary complex matrix, sorted by (real part, imaginary part).
    Defective matrices are rejected.
    """
    policy = policy or DEFAULT_POLICY
    a = as_matrix(a)
    dim = a.shape[0]
    if dim > policy.max_dim_general:
        raise DimensionMismatchError("eig_general accepts dim <= {}, got {}".format(policy.max_dim_general, dim))

    values, vectors = scipy.linalg.eig(a)
    vectors = vectors / np.linalg.norm(vectors, axis=0)

    # a (nearly) singular eigenvector matrix means the eigenvectors do not span the space
    condition = np.linalg.cond(vectors)
    if not np.isfinite(condition) or condition > policy.defect_condition:
        raise DefectiveMatrixError("defective matrix: eigenvector condition number {:.3e}".format(condition))

    scale = max(float(np.linalg.norm(a, 2)), np.finfo(float).tiny)
    residual = np.max(np.linalg.norm(a @ vectors - vectors * values, axis=0))
    if residual > policy.general_residual_tol * scale:
        raise DefectiveMatrixError("eigenpair residual {:.3e} exceeds tolerance".format(residual))

    order = np.lexsort((values.imag, values.real))
    return EigenSystem(values=values[order], vectors=vectors[:, order])


def expm(a, scale=1.0, policy=None):
    """
    Returns exp(scale * a) (scipy's scaling-and-squaring Pade approximant).
    """
    policy = policy or DEFAULT_POLICY
    a = as_matrix(a)
    if a.shape[0] > policy.max_dim_expm:
        raise DimensionMismatchError("expm accepts dim <= {}, got {}".format(policy.max_dim_expm, a.shape[0]))

    scaled = scale * a
    norm = float(np.linalg.norm(scaled, 1)) if scaled.size else 0.0
    if not np.isfinite(norm) or norm > policy.expm_max_norm:
        raise ExpmOverflowError(norm)

    result = scipy.linalg.expm(scaled)
    if not np.all(np.isfinite(result)):
        raise ExpmOverflowError(norm)
    return result


def partial_trace(rho, dims, keep="B"):
    """
    Reduced matrix of a bipartite operator.

    Inputs:
        rho - (d_A*d_B, d_A*d_B) matrix, index = i_A * d_B + i_B
        dims - (d_A, d_B)
        keep - "A" or "B", the factor that is kept
    """
    rho = as_matrix(rho)
    d_a, d_b = int(dims[0]), int(dims[1])
    if rho.shape[0] != d_a * d_b:
        raise DimensionMismatchError("rho has dim {}, expected {} x {}".format(rho.shape[0], d_a, d_b))

    blocks = rho.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.einsum("ibjb->ij", blocks)
    elif keep == "B":
        return np.einsum("aiaj->ij", blocks)
    raise ValueError("keep must be 'A' or 'B', got {!r}".format(keep))


def kron_all(ops):
    """Tensor product of a sequence of matrices, first factor leftmost."""
    return reduce(np.kron, ops)
