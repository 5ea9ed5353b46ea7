"""Currents, coherences, current correlations and noise spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .lindblad import Dissipators, Liouvillian, trace_functional, unvec, vec
from .model import BasisSet, dag
from .numerics import Propagator, eig_hermitian, hermiticity_defect, solve_linear


class FitError(RuntimeError):
    pass


@dataclass
class TimeTrace:
    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values)
        if self.times.shape != self.values.shape[:1]:
            raise ValueError("times and values must have equal length")
        if not np.all(np.isfinite(self.times)):
            raise ValueError("times must be finite")

    def window(self, t0: float, t1: float) -> TimeTrace:
        m = (self.times >= t0) & (self.times <= t1)
        return TimeTrace(self.times[m], self.values[m], self.label)


@dataclass
class Spectrum:
    omegas: np.ndarray
    values: np.ndarray
    diagnostics: dict | None = None


def current_operator(d: np.ndarray, Dp: np.ndarray, Dm: np.ndarray) -> np.ndarray:
    """``I = 1/2 (d^+ D^- - D^+ d^+) + h.c.``; positive for electrons leaving the dot."""
    half = 0.5 * (dag(d) @ Dm - Dp @ dag(d))
    op = half + dag(half)
    if hermiticity_defect(op) > 1e-12:
        raise RuntimeError("current operator is not Hermitian")
    return op


def current_operators(ds, diss: Dissipators) -> tuple[np.ndarray, np.ndarray]:
    return tuple(current_operator(d, Dp, Dm) for d, Dp, Dm in zip(ds, diss.Dp, diss.Dm))


def expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    return complex(np.trace(op @ rho))


def transient_current(L: Liouvillian, rho0, times, current_op,
                      propagator: Propagator | None = None) -> TimeTrace:
    prop = propagator or Propagator(L.G)
    rows = prop.many(vec(rho0), times)
    # Tr[I rho] = vec(I^T) . vec(rho)
    w = vec(current_op.T)
    return TimeTrace(times, (rows @ w).real, "I2")


def coherence_pairs(basis: BasisSet) -> list[tuple[int, int]]:
    """Index pairs (0_L state, 1_L state) with matching island role and dots."""
    if basis.block_mode != "both":
        raise ValueError("qubit coherence needs a basis holding both parity blocks")
    i0, i1 = basis.block_indices(0), basis.block_indices(1)
    return list(zip(i0.tolist(), i1.tolist()))


def qubit_coherence(rho: np.ndarray, basis: BasisSet) -> complex:
    """``rho_{0L,1L}``: sum of the elements between paired states of the two blocks."""
    return complex(sum(rho[i, j] for i, j in coherence_pairs(basis)))


def eigen_pair_coherence(rho: np.ndarray, H: np.ndarray, basis: BasisSet, k: int = 4) -> float:
    """Phase-insensitive alternative: sum of ``|<E_n^0|rho|E_n^1>|`` over the k lowest
    eigenstates of each block, paired by energy order."""
    i0, i1 = basis.block_indices(0), basis.block_indices(1)
    V0 = eig_hermitian(H[np.ix_(i0, i0)]).vectors[:, :k]
    V1 = eig_hermitian(H[np.ix_(i1, i1)]).vectors[:, :k]
    block = dag(V0) @ rho[np.ix_(i0, i1)] @ V1
    return float(np.abs(np.diag(block)).sum())


def intra_block_coherence(rho: np.ndarray, H: np.ndarray, m: int, n: int, k: int = 4) -> complex:
    """``<E_m|rho|E_n>`` with levels labelled 1..k by ascending energy."""
    if not (1 <= m <= k and 1 <= n <= k):
        raise ValueError(f"level labels must lie in 1..{k}")
    V = eig_hermitian(H).vectors
    return complex(dag(V[:, m - 1]) @ rho @ V[:, n - 1])


def current_correlation(L: Liouvillian, rho_stat, current_op, times,
                        propagator: Propagator | None = None) -> TimeTrace:
    """``C(t) = Tr[I exp(Lt) (I rho)] - <I>^2`` by the quantum regression theorem.

    The real part is the symmetrised correlator; the imaginary part is kept.
    """
    mean = expectation(current_op, rho_stat)
    X = current_op @ rho_stat - mean * rho_stat
    prop = propagator or Propagator(L.G)
    rows = prop.many(vec(X), times)
    return TimeTrace(times, rows @ vec(current_op.T), "C_I")


def correlation_transform(L: Liouvillian, rho_stat, current_op, omegas) -> np.ndarray:
    """One-sided transform ``int_0^inf exp(i w t) C(t) dt`` via the resolvent."""
    n = L.dim
    mean = expectation(current_op, rho_stat)
    X = vec(current_op @ rho_stat - mean * rho_stat)
    # rank-one shift makes the resolvent regular at w = 0 without touching
    # the traceless subspace in which X lives
    P0 = np.outer(vec(rho_stat), trace_functional(n))
    w_op = vec(current_op.T)
    out = []
    base = -L.G + P0
    eye = np.eye(L.G.shape[0])
    for w in np.atleast_1d(omegas):
        Y = solve_linear(base - 1j * w * eye, X)
        out.append(w_op @ Y)
    return np.array(out)


def power_spectrum(L: Liouvillian, rho_stat, current_op, omegas) -> Spectrum:
    """Symmetrised noise ``S(w) = 2 Re[C(w) + C(-w)]``."""
    omegas = np.asarray(omegas, dtype=float)
    cp = correlation_transform(L, rho_stat, current_op, omegas)
    cm = correlation_transform(L, rho_stat, current_op, -omegas)
    return Spectrum(omegas, 2.0 * (cp + cm).real, {"self_correlation_term": False})


def fano_factor(L: Liouvillian, rho_stat, current_op) -> float:
    """``S(0) / 2I`` without a shot-noise self-correlation term."""
    S0 = power_spectrum(L, rho_stat, current_op, [0.0]).values[0]
    return float(S0 / (2.0 * expectation(current_op, rho_stat).real))


@dataclass(frozen=True)
class DecayComponent:
    rate: float
    amplitude: float


@dataclass(frozen=True)
class DecayFit:
    components: tuple[DecayComponent, ...]
    rms_log_residual: float

    @property
    def rates(self) -> list[float]:
        return [c.rate for c in self.components]


def fit_decay_rates(trace: TimeTrace, window=None, n_exp: int = 1, offset: float = 0.0,
                    rate_guesses=None) -> DecayFit:
    """Least-squares fit of one or two decaying exponentials to ``|values - offset|``.

    The fit is done on the logarithm so that small late-time tails carry the
    same weight as the early signal. Rates come back sorted fastest first.
    """
    tr = trace if window is None else trace.window(*window)
    if tr.times.size < 2 * n_exp + 1:
        raise FitError("not enough samples in the fit window")
    y = np.abs(np.asarray(tr.values) - offset)
    if np.any(y <= 0):
        raise FitError("data must be positive after offset removal")
    t = tr.times - tr.times[0]
    logy = np.log(y)
    span = max(t[-1], 1e-300)
    if rate_guesses is None:
        slope = -(logy[-1] - logy[0]) / span
        rate_guesses = [max(slope, 1.0 / span)] if n_exp == 1 else \
            [max(slope, 1.0 / span) * 10.0, max(slope, 1.0 / span) * 0.3]

    def model(x):
        amps = np.exp(x[:n_exp])
        rates = np.exp(x[n_exp:])
        return np.log(np.sum(amps[:, None] * np.exp(-rates[:, None] * t[None, :]), axis=0))

    x0 = np.concatenate([np.full(n_exp, logy[0] - np.log(n_exp)), np.log(rate_guesses)])
    sol = least_squares(lambda x: model(x) - logy, x0, method="lm", x_scale="jac")
    amps = np.exp(sol.x[:n_exp]) * np.exp(0.0)
    rates = np.exp(sol.x[n_exp:])
    # amplitudes refer to the window start
    order = np.argsort(-rates)
    comps = tuple(DecayComponent(float(rates[i]), float(amps[i])) for i in order)
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    return DecayFit(comps, rms)


@dataclass(frozen=True)
class ModeFit:
    """Complex exponents ``s_k`` and amplitudes ``c_k`` of ``sum_k c_k exp(s_k t)``."""

    exponents: np.ndarray
    amplitudes: np.ndarray
    rms_residual: float

    def dominant_oscillation(self, max_frequency: float = np.inf, min_frequency: float = 1e-8):
        """Exponent of the largest-amplitude oscillating mode inside the band."""
        w = np.abs(self.exponents.imag)
        ok = (w > min_frequency) & (w < max_frequency)
        if not ok.any():
            raise FitError("no oscillating mode in the requested frequency band")
        k = np.flatnonzero(ok)[np.argmax(np.abs(self.amplitudes[ok]))]
        return complex(self.exponents[k])


def fit_modes(trace: TimeTrace, order: int, window=None) -> ModeFit:
    """Matrix-pencil extraction of ``order`` complex exponentials from a
    uniformly sampled trace. Modes are returned by descending amplitude."""
    tr = trace if window is None else trace.window(*window)
    t, y = tr.times, np.asarray(tr.values, dtype=complex)
    n = t.size
    if n < 2 * order + 2:
        raise FitError("not enough samples for the requested model order")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise FitError("matrix-pencil fit needs uniform sampling")
    dt = dt[0]
    L = n // 2
    Y = np.lib.stride_tricks.sliding_window_view(y, L + 1)
    _, _, Vh = np.linalg.svd(Y, full_matrices=False)
    # rows of Vh span the signal space spanned by (1, z, z^2, ...)
    V = Vh[:order].T
    z = np.linalg.eigvals(np.linalg.pinv(V[:-1]) @ V[1:])
    s = np.log(z.astype(complex)) / dt
    A = np.exp(np.outer(t - t[0], s))
    c, *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean(np.abs(A @ c - y) ** 2)))
    # amplitudes are referenced to the window start
    order_ = np.argsort(-np.abs(c), kind="stable")
    return ModeFit(s[order_], c[order_], rms)


def log_slope_rate(trace: TimeTrace, window=None) -> float:
    """Decay rate from a straight-line fit of ``log|values|``; suited to
    near-constant data where an exponential fit is ill-posed."""
    tr = trace if window is None else trace.window(*window)
    y = np.abs(np.asarray(tr.values))
    if tr.times.size < 2 or np.any(y <= 0):
        raise FitError("need at least two positive samples")
    slope = np.polyfit(tr.times, np.log(y), 1)[0]
    return float(-slope)
