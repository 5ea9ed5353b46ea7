"""Dense complex linear-algebra kernels.

Every routine here is checked against a residual contract rather than a
particular algorithm, so the LAPACK routines behind numpy/scipy do the heavy
lifting. Matrices are plain ``numpy.ndarray`` objects of dtype complex128.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import zgecon


class ContractError(ValueError):
    """Input violates the precondition of a numerical kernel."""


class NumericalError(ArithmeticError):
    """A kernel failed to meet its residual contract."""


class SingularMatrixError(NumericalError):
    pass


@dataclass
class Tolerances:
    hermitian: float = 1e-12
    eig_hermitian_residual: float = 1e-10
    eig_general_residual: float = 1e-9
    solve_residual: float = 1e-10
    singular_condition: float = 1e14
    expm_condition: float = 1e8


TOL = Tolerances()


@dataclass(frozen=True)
class EigResult:
    values: np.ndarray
    vectors: np.ndarray


def as_matrix(M) -> np.ndarray:
    """Validate and convert ``M`` to a finite 2-D complex array."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ContractError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ContractError("matrix contains NaN or Inf entries")
    return A


def _square(M) -> np.ndarray:
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise ContractError(f"matrix must be square, got shape {A.shape}")
    return A


def fingerprint(A: np.ndarray) -> str:
    """Short content hash used to identify a matrix in error messages."""
    digest = hashlib.sha1(np.ascontiguousarray(A).tobytes()).hexdigest()[:12]
    return f"{A.shape[0]}x{A.shape[1]}:{digest}"


def norm2(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 2)) if A.size else 0.0


def hermiticity_defect(A: np.ndarray) -> float:
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def eig_hermitian(M, tol: float | None = None) -> EigResult:
    """Eigen-decomposition of a Hermitian matrix.

    Returns real eigenvalues in ascending order and orthonormal eigenvectors
    (column ``k`` pairs with ``values[k]``).
    """
    A = _square(M)
    htol = TOL.hermitian if tol is None else tol
    defect = hermiticity_defect(A)
    if defect > htol * max(1.0, float(np.max(np.abs(A)))):
        raise ContractError(f"matrix is not Hermitian (defect {defect:.3e})")
    w, V = np.linalg.eigh(A)
    scale = norm2(A)
    resid = np.linalg.norm(A @ V - V * w, axis=0)
    if np.any(resid > TOL.eig_hermitian_residual * max(scale, 1e-300)):
        raise NumericalError(f"eigh residual {resid.max():.3e} too large for {fingerprint(A)}")
    return EigResult(w, V)


def eig_general(M, scale: float | None = None) -> EigResult:
    """Right eigenpairs of a general square matrix.

    ``scale`` may pass a precomputed ``||M||_2`` for the residual check.
    """
    A = _square(M)
    try:
        w, V = sla.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eig failed to converge for {fingerprint(A)}") from exc
    if scale is None:
        scale = norm2(A)
    resid = np.linalg.norm(A @ V - V * w, axis=0)
    if np.any(resid > TOL.eig_general_residual * max(scale, 1e-300)):
        raise NumericalError(
            f"eig residual {resid.max():.3e} exceeds contract for {fingerprint(A)}"
        )
    return EigResult(w, V)


def solve_linear(A, b) -> np.ndarray:
    """Solve ``A x = b`` with a residual check and a conditioning guard."""
    A = _square(A)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != A.shape[0]:
        raise ContractError(f"rhs length {b.shape[0]} does not match matrix {A.shape}")
    lu, piv = sla.lu_factor(A, check_finite=False)
    # 1-norm condition estimate from the LU factors
    rcond = _rcond(A, lu)
    if rcond < 1.0 / TOL.singular_condition:
        raise SingularMatrixError(f"matrix {fingerprint(A)} is singular (rcond {rcond:.2e})")
    x = sla.lu_solve((lu, piv), b, check_finite=False)
    r = np.linalg.norm(A @ x - b)
    bound = TOL.solve_residual * (norm2(A) * np.linalg.norm(x) + np.linalg.norm(b))
    if r > bound and r > 0:
        raise NumericalError(f"solve residual {r:.3e} exceeds {bound:.3e}")
    return x


def reciprocal_condition(A, lu=None) -> float:
    """LAPACK estimate of ``1 / cond_1(A)``; ``lu`` may pass existing LU factors."""
    A = _square(A)
    if lu is None:
        lu, _ = sla.lu_factor(A, check_finite=False)
    return _rcond(A, lu)


def _rcond(A: np.ndarray, lu: np.ndarray) -> float:
    anorm = np.linalg.norm(A, 1)
    if anorm == 0:
        return 0.0
    rcond, info = zgecon(lu, anorm, norm="1")
    return float(rcond)


class Propagator:
    """Caches a decomposition of ``A`` to evaluate ``exp(A t) v`` for many ``t``.

    The spectral route is used when the eigenvector matrix is well conditioned;
    otherwise each call falls back to scaling-and-squaring Pade (``scipy``).
    """

    def __init__(self, A, cond_limit: float | None = None):
        self.A = _square(A)
        limit = TOL.expm_condition if cond_limit is None else cond_limit
        self.spectral = False
        try:
            w, V = sla.eig(self.A)
        except np.linalg.LinAlgError:
            return
        cond = np.linalg.cond(V)
        if np.isfinite(cond) and cond < limit:
            self.values = w
            self.vectors = V
            self.lu = sla.lu_factor(V)
            self.spectral = True

    def coefficients(self, v) -> np.ndarray:
        """Expansion coefficients of ``v`` in the eigenvector basis."""
        return sla.lu_solve(self.lu, np.asarray(v, dtype=complex))

    def __call__(self, v, t: float) -> np.ndarray:
        if t < 0:
            raise ContractError("backward propagation (t < 0) is not supported")
        v = np.asarray(v, dtype=complex)
        if t == 0:
            return v.copy()
        if self.spectral:
            c = self.coefficients(v)
            return self.vectors @ (np.exp(self.values * t) * c)
        return sla.expm(self.A * t) @ v

    def many(self, v, times) -> np.ndarray:
        """Rows are ``exp(A t_k) v`` for each ``t_k`` in ``times``."""
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise ContractError("backward propagation (t < 0) is not supported")
        v = np.asarray(v, dtype=complex)
        if not self.spectral:
            return np.array([self(v, t) for t in times])
        c = self.coefficients(v)
        out = (np.exp(np.outer(times, self.values)) * c) @ self.vectors.T
        out[times == 0] = v
        return out


def expm_action(A, v, t: float) -> np.ndarray:
    """Return ``exp(A t) v`` for ``t >= 0``."""
    if t < 0:
        raise ContractError("backward propagation (t < 0) is not supported")
    return Propagator(A)(v, t)
