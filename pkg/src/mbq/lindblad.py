"""Reservoir dissipators, Liouvillian assembly, steady states and propagation.

Density matrices are vectorised by column stacking, ``vec(X) = X.ravel("F")``,
so that ``vec(A X B) = (B.T kron A) vec(X)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.special import expit

from .model import SystemParams, dag
from .numerics import (NumericalError, Propagator, eig_general, eig_hermitian,
                       hermiticity_defect, norm2, reciprocal_condition)

ZERO_MODE_THRESHOLD = 1e-10
POSITIVITY_WARN = 1e-6


class AmbiguousSteadyStateError(NumericalError):
    """More than one zero mode where a unique steady state was requested."""


class PositivityWarning(RuntimeWarning):
    pass


def vec(X: np.ndarray) -> np.ndarray:
    return np.asarray(X).ravel(order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return v.reshape((dim, dim), order="F")


def left(A: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> A X``."""
    return np.kron(np.eye(A.shape[0]), A)


def right(B: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> X B``."""
    return np.kron(B.T, np.eye(B.shape[0]))


def sandwich(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> A X B``, equal to ``left(A) @ right(B)``."""
    return np.kron(B.T, A)


def fermi(eps, mu, T):
    """Fermi function; at ``T = 0`` a step with value 1/2 at the edge."""
    x = np.asarray(eps, dtype=float) - mu
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if T == 0:
        out = np.where(x < 0, 1.0, np.where(x > 0, 0.0, 0.5))
    else:
        with np.errstate(over="ignore"):
            # expit saturates correctly at +-inf
            out = expit(-x / T)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Dissipators:
    Dp: tuple[np.ndarray, np.ndarray]
    Dm: tuple[np.ndarray, np.ndarray]


def build_dissipators(H: np.ndarray, d1: np.ndarray, d2: np.ndarray,
                      params: SystemParams) -> Dissipators:
    """``(D_j^{+-})_{nm} = Gamma_j f_j^{+-}(E_m - E_n) (d_j)_{nm}`` in the eigenbasis of H."""
    eig = eig_hermitian(H)
    E, V = eig.values, eig.vectors
    omega = E[None, :] - E[:, None]  # omega[n, m] = E_m - E_n
    Dp, Dm = [], []
    for d, gamma, mu in ((d1, params.Gamma1, params.mu1), (d2, params.Gamma2, params.mu2)):
        d_eig = dag(V) @ d @ V
        f = fermi(omega, mu, params.T)
        Dp.append(V @ (gamma * f * d_eig) @ dag(V))
        Dm.append(V @ (gamma * (1.0 - f) * d_eig) @ dag(V))
    return Dissipators(tuple(Dp), tuple(Dm))


def apply_generator(rho: np.ndarray, H, ds, diss: Dissipators) -> np.ndarray:
    """Right-hand side of the master equation evaluated directly on a matrix.

    The "+ h.c." is literal only for Hermitian input; other matrices are split
    into Hermitian parts so that the map is the linear extension.
    """
    rho = np.asarray(rho)
    if hermiticity_defect(rho) > 0:
        re, im = 0.5 * (rho + dag(rho)), -0.5j * (rho - dag(rho))
        return apply_generator(re, H, ds, diss) + 1j * apply_generator(im, H, ds, diss)
    out = -1j * (H @ rho - rho @ H)
    for d, Dp, Dm in zip(ds, diss.Dp, diss.Dm):
        inner = Dm @ rho - rho @ Dp
        comm = dag(d) @ inner - inner @ dag(d)
        out -= 0.5 * (comm + dag(comm))
    return out


@dataclass(frozen=True)
class Liouvillian:
    G: np.ndarray
    dim: int
    blocks: np.ndarray | None = None  # parity_L label per basis state

    def __matmul__(self, rho):
        return unvec(self.G @ vec(rho), self.dim)

    @cached_property
    def norm(self) -> float:
        return norm2(self.G)

    @cached_property
    def norm_estimate(self) -> float:
        """Power-iteration lower bound on ``||G||_2``; deterministic and cheap."""
        return power_norm(self.G)


def power_norm(G: np.ndarray, iters: int = 40) -> float:
    x = np.ones(G.shape[1], dtype=complex) / np.sqrt(G.shape[1])
    est = 0.0
    for _ in range(iters):
        y = G.conj().T @ (G @ x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        est = np.sqrt(ny)
        x = y / ny
    return float(est)


def assemble_liouvillian(H, d1, d2, diss: Dissipators, blocks=None) -> Liouvillian:
    dim = H.shape[0]
    # one-sided terms are summed before the Kronecker product
    L_one = -1j * H
    R_one = 1j * H
    two = np.zeros((dim * dim, dim * dim), dtype=complex)
    for d, Dp, Dm in zip((d1, d2), diss.Dp, diss.Dm):
        dd = dag(d)
        # -1/2 {[d^+, Dm rho - rho Dp] + h.c.}, expanded term by term
        L_one = L_one - 0.5 * (dd @ Dm + d @ dag(Dp))
        R_one = R_one - 0.5 * (dag(Dm) @ d + Dp @ dd)
        two += 0.5 * (sandwich(dd, Dp) + sandwich(dag(Dp), d)
                      + sandwich(Dm, dd) + sandwich(d, dag(Dm)))
    G = left(L_one) + right(R_one) + two
    return Liouvillian(G, dim, None if blocks is None else np.asarray(blocks))


def trace_functional(dim: int) -> np.ndarray:
    return vec(np.eye(dim))


def _hermitize_normalize(rho: np.ndarray) -> np.ndarray:
    rho = 0.5 * (rho + dag(rho))
    return rho / np.trace(rho).real


def liouvillian_spectrum(L: Liouvillian) -> np.ndarray:
    """All eigenvalues ordered by ascending ``|Re|`` (ties by ``|Im|``)."""
    w = eig_general(L.G, scale=L.norm).values
    order = np.lexsort((np.abs(w.imag), np.abs(w.real)))
    return w[order]


def zero_modes(L: Liouvillian, threshold: float = ZERO_MODE_THRESHOLD):
    eig = eig_general(L.G, scale=L.norm)
    mask = np.abs(eig.values) < threshold * max(L.norm, 1e-300)
    return eig, mask


@dataclass
class SteadyStateInfo:
    method: str
    residual: float  # ||G rho|| / ||G||
    zero_mode_gap: float | None = None  # |second smallest eigenvalue| / ||G||
    rcond: float | None = None  # conditioning of the bordered system
    extra: dict = field(default_factory=dict)


def steady_state(L: Liouvillian, threshold: float = ZERO_MODE_THRESHOLD, method: str = "eig",
                 return_info: bool = False):
    """Unique stationary density matrix of a single-block Liouvillian.

    ``method="eig"`` takes the eigenvector of the smallest-modulus eigenvalue
    and reports the gap to the next mode. ``method="solve"`` replaces one row
    of ``G`` by the trace condition and solves the bordered system by LU,
    which is much cheaper and suited to dense parameter scans.
    """
    if method == "eig":
        rho, info = _steady_state_eig(L, threshold)
    elif method == "solve":
        rho, info = _steady_state_solve(L, threshold)
    else:
        raise ValueError(f"unknown steady-state method {method!r}")
    rho = _hermitize_normalize(rho)
    scale = L.norm if method == "eig" else L.norm_estimate
    info.residual = float(np.linalg.norm(L.G @ vec(rho)) / scale)
    if info.residual > 1e-9:
        rho = _hermitize_normalize(_steady_state_constrained(L))
        info.residual = float(np.linalg.norm(L.G @ vec(rho)) / scale)
        info.extra["fallback"] = "lstsq"
    return (rho, info) if return_info else rho


def _steady_state_eig(L: Liouvillian, threshold: float):
    eig, mask = zero_modes(L, threshold)
    if mask.sum() > 1:
        raise AmbiguousSteadyStateError(
            f"{mask.sum()} zero modes found; compute the steady state per parity block")
    mods = np.abs(eig.values)
    order = np.argsort(mods)
    gap = mods[order[1]] - mods[order[0]] if mods.size > 1 else np.inf
    info = SteadyStateInfo("eig", np.nan, float(mods[order[1]] / L.norm) if mods.size > 1 else None)
    rho = unvec(eig.vectors[:, order[0]], L.dim)
    if gap < 1e-12 or abs(np.trace(rho)) < 1e-14:
        rho = _steady_state_constrained(L)
        info.extra["fallback"] = "lstsq"
    return rho, info


def _steady_state_solve(L: Liouvillian, threshold: float):
    A = L.G.copy()
    # the trace functional is a left null vector of G, so one row is redundant
    A[0] = trace_functional(L.dim)
    b = np.zeros(A.shape[0], dtype=complex)
    b[0] = 1.0
    lu = lu_factor(A, check_finite=False)
    rcond = reciprocal_condition(A, lu[0])
    if rcond < 1e-14:
        raise AmbiguousSteadyStateError(
            f"bordered steady-state system is singular (rcond {rcond:.2e}); "
            "the zero mode is not unique, compute per parity block")
    x = lu_solve(lu, b, check_finite=False)
    return unvec(x, L.dim), SteadyStateInfo("solve", np.nan, rcond=rcond)


def _steady_state_constrained(L: Liouvillian) -> np.ndarray:
    # least squares on G x = 0 with the trace row appended
    A = np.vstack([L.G, trace_functional(L.dim)[None, :]])
    b = np.zeros(A.shape[0], dtype=complex)
    b[-1] = 1.0
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return unvec(x, L.dim)


def steady_state_per_block(L: Liouvillian, method: str = "eig") -> dict[int, np.ndarray]:
    """Stationary state of each parity block embedded in the full space."""
    if L.blocks is None:
        return {0: steady_state(L, method=method)}
    out = {}
    for b in np.unique(L.blocks):
        idx = np.flatnonzero(L.blocks == b)
        rho = np.zeros((L.dim, L.dim), dtype=complex)
        rho[np.ix_(idx, idx)] = steady_state(restrict(L, idx), method=method)
        out[int(b)] = rho
    return out


def restrict(L: Liouvillian, idx) -> Liouvillian:
    """Liouvillian restricted to density matrices supported on ``idx x idx``."""
    idx = np.asarray(idx)
    sel = (idx[None, :] * L.dim + idx[:, None]).ravel(order="F")
    return Liouvillian(L.G[np.ix_(sel, sel)], len(idx))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), dim, dim)

    def diagnostics(self) -> dict:
        tr = np.abs(np.trace(self.states, axis1=1, axis2=2) - 1.0)
        herm = np.array([hermiticity_defect(r) for r in self.states])
        mins = np.array([np.linalg.eigvalsh(0.5 * (r + dag(r)))[0] for r in self.states])
        return {"trace_error": float(tr.max()), "hermiticity_defect": float(herm.max()),
                "min_eigenvalue": float(mins.min())}


def propagate(L: Liouvillian, rho0: np.ndarray, times, propagator: Propagator | None = None,
              check: bool = True) -> Trajectory:
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("times must be ascending and non-negative")
    prop = propagator or Propagator(L.G)
    rows = prop.many(vec(rho0), times)
    states = np.array([unvec(r, L.dim) for r in rows])
    traj = Trajectory(times, states)
    if check:
        diag = traj.diagnostics()
        if diag["min_eigenvalue"] < -POSITIVITY_WARN:
            warnings.warn(f"density matrix lost positivity (min eigenvalue "
                          f"{diag['min_eigenvalue']:.3e})", PositivityWarning, stacklevel=2)
    return traj
