"""Estimator-style front end for the transport simulation.

``MajoranaTransport`` follows the scikit-learn conventions: constructor
arguments are hyper-parameters (``get_params``/``set_params``/``clone`` work),
``fit`` assembles the model and solves for the stationary state, and fitted
quantities carry a trailing underscore.

Example
-------
>>> est = MajoranaTransport(lambda0=0.02, block=1).fit()
>>> I1, I2 = est.steady_current()
"""

from __future__ import annotations

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted
from threadpoolctl import threadpool_limits

from .lindblad import (Liouvillian, assemble_liouvillian, build_dissipators, liouvillian_spectrum,
                       propagate, restrict, steady_state, vec)
from .model import (SystemParams, basis_for_gate_charge, build_basis, build_effective_hamiltonian,
                    build_hamiltonian, build_mode_operators)
from .numerics import Propagator, eig_hermitian
from .observables import (TimeTrace, current_correlation, current_operators, expectation,
                          fano_factor, power_spectrum, transient_current)

PARAM_NAMES = tuple(SystemParams.__dataclass_fields__)
DEFAULT_WINDOW = 0.05
LOW_ENERGY_CUT = 0.5  # in units of E_C above the ground state


def low_energy_spread(H: np.ndarray, E_C: float = 1.0) -> float:
    """Largest level spacing inside the low-energy manifold of ``H``."""
    E = eig_hermitian(H).values
    low = E[E < E[0] + LOW_ENERGY_CUT * E_C]
    return float(low[-1] - low[0])


def wide_window(params: SystemParams, charge_mode: str | None = None,
                margin: float = 1.5, minimum: float = DEFAULT_WINDOW) -> float:
    """Half-width ``w`` of a bias window ``mu1 = w, mu2 = -w`` that admits every
    transition within the low-energy manifold of both parity blocks."""
    spread = 0.0
    for blk in (0, 1):
        basis = basis_for_gate_charge(params.n_g, blk, charge_mode)
        spread = max(spread, low_energy_spread(build_hamiltonian(params, basis), params.E_C))
    return max(minimum * params.E_C, margin * spread)


def _state_diagnostics(rho: np.ndarray, info) -> dict:
    return {"method": info.method, "residual": info.residual,
            "zero_mode_gap": info.zero_mode_gap, "rcond": info.rcond,
            "trace_error": float(abs(np.trace(rho) - 1.0)),
            "hermiticity_defect": float(np.max(np.abs(rho - rho.conj().T))),
            "min_eigenvalue": float(np.linalg.eigvalsh(rho)[0])}


class MajoranaTransport(BaseEstimator):
    """Majorana box qubit read out through two quantum dots.

    Parameters
    ----------
    E_C, lambda0, lambda1, lambda2, phi, eps1, eps2, n_g, Gamma1, Gamma2, mu1, mu2, T
        Physical parameters; see :class:`mbq.model.SystemParams`.
    block : {0, 1, "both"}
        Parity block(s) of the qubit to simulate.
    model : {"full", "effective"}
        Full island + dots model or the four-state double-dot Hamiltonian.
    charge_mode : {"auto", "three", "four", "five"}
        Island charge states kept. ``"auto"`` uses three states at integer
        even ``n_g`` and four otherwise; ``"five"`` keeps N+2 and N-2.
    window : {"auto", "fixed"}
        With ``"auto"`` the bias window is widened (symmetrically) whenever
        ``mu1``/``mu2`` do not cover all low-energy transitions.
    window_margin : float
        Safety factor on the low-energy spread used by the automatic window.
    gauge : {"bare", "mirrored"}
        Only affects coherences between the two blocks. ``"bare"`` uses the
        same dot operators on both blocks; ``"mirrored"`` flips the sign of
        ``d2`` on the 1_L block, which makes 1_L the flux-shifted replica of
        0_L and removes the parity sign picked up by each transferred electron.
    steady_method : {"eig", "solve"}
        Zero-mode eigenvector (reports the spectral gap) or bordered LU solve
        (cheaper, used for dense scans).

    Attributes
    ----------
    diagnostics_ : dict
        Per block: steady-state residual, zero-mode gap or rcond, trace and
        Hermiticity errors, and the bias window actually used.
    """

    def __init__(self, E_C=1.0, lambda0=0.01, lambda1=0.1, lambda2=0.1, phi=0.0, eps1=0.0,
                 eps2=0.0, n_g=0.0, Gamma1=0.01, Gamma2=0.01, mu1=0.05, mu2=-0.05, T=0.0,
                 block=0, model="full", charge_mode="auto", window="auto", window_margin=1.5,
                 gauge="bare", steady_method="eig"):
        self.E_C = E_C
        self.lambda0 = lambda0
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.phi = phi
        self.eps1 = eps1
        self.eps2 = eps2
        self.n_g = n_g
        self.Gamma1 = Gamma1
        self.Gamma2 = Gamma2
        self.mu1 = mu1
        self.mu2 = mu2
        self.T = T
        self.block = block
        self.model = model
        self.charge_mode = charge_mode
        self.window = window
        self.window_margin = window_margin
        self.gauge = gauge
        self.steady_method = steady_method

    @classmethod
    def from_params(cls, params: SystemParams, **kwargs) -> MajoranaTransport:
        return cls(**{k: getattr(params, k) for k in PARAM_NAMES}, **kwargs)

    @property
    def system_params(self) -> SystemParams:
        return SystemParams(**{k: getattr(self, k) for k in PARAM_NAMES})

    def _validate(self):
        if self.block not in (0, 1, "both"):
            raise ValueError(f"block must be 0, 1 or 'both', got {self.block!r}")
        if self.model not in ("full", "effective"):
            raise ValueError(f"model must be 'full' or 'effective', got {self.model!r}")
        if self.charge_mode not in ("auto", "three", "four", "five"):
            raise ValueError(f"invalid charge_mode {self.charge_mode!r}")
        if self.window not in ("auto", "fixed"):
            raise ValueError(f"window must be 'auto' or 'fixed', got {self.window!r}")
        if self.gauge not in ("bare", "mirrored"):
            raise ValueError(f"gauge must be 'bare' or 'mirrored', got {self.gauge!r}")
        if self.steady_method not in ("eig", "solve"):
            raise ValueError(f"steady_method must be 'eig' or 'solve', got {self.steady_method!r}")

    def fit(self, X=None, y=None):
        """Assemble the Liouvillian and compute the stationary state(s).

        ``X`` and ``y`` are ignored; they exist for pipeline compatibility.
        """
        self._validate()
        params = self.system_params
        charge_mode = None if self.charge_mode == "auto" else self.charge_mode
        if self.window == "auto":
            w = wide_window(params, charge_mode, self.window_margin)
            params = params.replace(mu1=max(params.mu1, w), mu2=min(params.mu2, -w))
        self.params_ = params

        if self.model == "full":
            basis = basis_for_gate_charge(params.n_g, self.block, charge_mode)
            ops = build_mode_operators(basis)
            H = build_hamiltonian(params, basis, ops)
        else:
            basis = build_basis(self.block, "ground")
            ops = build_mode_operators(basis)
            blocks = (0, 1) if self.block == "both" else (self.block,)
            H = np.zeros((basis.dim, basis.dim), dtype=complex)
            for b in blocks:
                idx = basis.block_indices(b)
                H[np.ix_(idx, idx)] = build_effective_hamiltonian(params, 1 if b == 0 else -1)
        d1, d2 = ops.d1, ops.d2
        if self.gauge == "mirrored":
            d2 = np.diag(np.where(basis.blocks == 1, -1.0, 1.0)) @ d2

        self.basis_ = basis
        self.mode_ops_ = ops
        self.hamiltonian_ = H
        self.dissipators_ = build_dissipators(H, d1, d2, params)
        self.jump_ops_ = (d1, d2)
        self.liouvillian_ = assemble_liouvillian(H, d1, d2, self.dissipators_, basis.blocks)
        self.current_ops_ = current_operators(self.jump_ops_, self.dissipators_)
        self.diagnostics_ = {"mu1": params.mu1, "mu2": params.mu2}
        if self.block == "both":
            self.rho_stat_ = {}
            for b in (0, 1):
                idx = basis.block_indices(b)
                rho_b, info = steady_state(restrict(self.liouvillian_, idx),
                                           method=self.steady_method, return_info=True)
                rho = np.zeros((basis.dim, basis.dim), dtype=complex)
                rho[np.ix_(idx, idx)] = rho_b
                self.rho_stat_[b] = rho
                self.diagnostics_[b] = _state_diagnostics(rho_b, info)
        else:
            self.rho_stat_, info = steady_state(self.liouvillian_, method=self.steady_method,
                                                return_info=True)
            self.diagnostics_[self.block] = _state_diagnostics(self.rho_stat_, info)
        self._propagator = None
        return self

    # -- fitted quantities -------------------------------------------------

    @property
    def propagator_(self) -> Propagator:
        check_is_fitted(self, "liouvillian_")
        if self._propagator is None:
            self._propagator = Propagator(self.liouvillian_.G)
        return self._propagator

    def _stationary(self, block=None) -> np.ndarray:
        check_is_fitted(self, "rho_stat_")
        if isinstance(self.rho_stat_, dict):
            if block is None:
                raise ValueError("specify the block for a two-block simulation")
            return self.rho_stat_[block]
        return self.rho_stat_

    def steady_current(self, block=None) -> tuple[float, float]:
        """Stationary currents ``(I1, I2)`` out of dots 1 and 2 into their reservoirs."""
        rho = self._stationary(block)
        I1, I2 = (expectation(op, rho).real for op in self.current_ops_)
        return I1, I2

    def block_currents(self) -> dict[int, float]:
        check_is_fitted(self, "rho_stat_")
        if isinstance(self.rho_stat_, dict):
            return {b: self.steady_current(b)[1] for b in self.rho_stat_}
        return {self.block: self.steady_current()[1]}

    def initial_state(self, block=None) -> np.ndarray:
        """Projector on the island ground state with both dots empty.

        For a two-block simulation the equal superposition of the two qubit
        states is returned unless ``block`` is given.
        """
        check_is_fitted(self, "basis_")
        basis = self.basis_
        ground = [i for i, s in enumerate(basis.states)
                  if s.dot1 == 0 and s.dot2 == 0 and s.dN == 0]
        psi = np.zeros(basis.dim, dtype=complex)
        if block is None and self.block == "both":
            psi[ground] = 1.0
        else:
            b = self.block if block is None else block
            psi[[i for i in ground if basis.states[i].parity_L == b]] = 1.0
        psi /= np.linalg.norm(psi)
        return np.outer(psi, psi.conj())

    def transient(self, times, rho0=None) -> TimeTrace:
        """``I2(t)`` after the coupling to the dots is switched on at ``t = 0``."""
        rho0 = self.initial_state() if rho0 is None else rho0
        return transient_current(self.liouvillian_, rho0, times, self.current_ops_[1],
                                 self.propagator_)

    def evolve(self, times, rho0=None, check: bool = True):
        rho0 = self.initial_state() if rho0 is None else rho0
        return propagate(self.liouvillian_, rho0, times, self.propagator_, check)

    def predict(self, X):
        """Read-out current ``I2`` at the times in the single column of ``X``."""
        X = check_array(X, ensure_2d=False, dtype=float)
        t = np.ravel(X)
        order = np.argsort(t, kind="stable")
        vals = np.empty_like(t)
        vals[order] = self.transient(t[order]).values
        return vals

    def correlation(self, times, block=None) -> TimeTrace:
        return current_correlation(self._single_liouvillian(block), self._stationary_local(block),
                                   self._current_local(block), times)

    def power_spectrum(self, omegas, block=None):
        return power_spectrum(self._single_liouvillian(block), self._stationary_local(block),
                              self._current_local(block), omegas)

    def fano_factor(self, block=None) -> float:
        return fano_factor(self._single_liouvillian(block), self._stationary_local(block),
                           self._current_local(block))

    def liouvillian_spectrum(self) -> np.ndarray:
        check_is_fitted(self, "liouvillian_")
        return liouvillian_spectrum(self.liouvillian_)

    def energies(self, block=None) -> np.ndarray:
        check_is_fitted(self, "hamiltonian_")
        H = self.hamiltonian_
        if self.block == "both" and block is not None:
            idx = self.basis_.block_indices(block)
            H = H[np.ix_(idx, idx)]
        return eig_hermitian(H).values

    def residual(self, block=None) -> float:
        """``||G rho_stat|| / ||G||``, a steady-state diagnostic."""
        L = self.liouvillian_
        return float(np.linalg.norm(L.G @ vec(self._stationary(block))) / L.norm)

    # -- helpers for the two-block case -------------------------------------

    def _indices(self, block):
        if self.block != "both":
            return None
        if block is None:
            raise ValueError("specify the block for a two-block simulation")
        return self.basis_.block_indices(block)

    def _single_liouvillian(self, block) -> Liouvillian:
        check_is_fitted(self, "liouvillian_")
        idx = self._indices(block)
        return self.liouvillian_ if idx is None else restrict(self.liouvillian_, idx)

    def _stationary_local(self, block) -> np.ndarray:
        idx = self._indices(block)
        rho = self._stationary(block)
        return rho if idx is None else rho[np.ix_(idx, idx)]

    def _current_local(self, block) -> np.ndarray:
        idx = self._indices(block)
        op = self.current_ops_[1]
        return op if idx is None else op[np.ix_(idx, idx)]



# -- parameter scans ----------------------------------------------------------

def _chunk_currents(rows, columns, base: dict, blocks, est_kwargs: dict):
    out = []
    # one BLAS thread everywhere so results do not depend on the worker count
    with threadpool_limits(limits=1):
        for row in rows:
            params = SystemParams.from_dict(base).replace(
                **dict(zip(columns, (float(v) for v in row))))
            params = {k: getattr(params, k) for k in PARAM_NAMES}
            currents, diags = [], []
            for b in blocks:
                est = MajoranaTransport(**params, block=b, **est_kwargs).fit()
                I1, I2 = est.steady_current()
                diag = dict(est.diagnostics_[b])
                diag["current_sum"] = abs(I1 + I2)
                diag["mu1"], diag["mu2"] = est.params_.mu1, est.params_.mu2
                currents.append(I2)
                diags.append(diag)
            out.append((currents, diags))
    return out


def parallel_chunks(func, items, n_jobs: int = 1, *args):
    """Apply ``func(chunk, *args)`` over contiguous chunks of ``items`` and
    concatenate the results in input order."""
    items = list(items)
    if not items:
        return []
    n_jobs = max(1, int(n_jobs))
    if n_jobs == 1:
        return func(items, *args)
    n_chunks = min(len(items), 4 * n_jobs)
    bounds = np.linspace(0, len(items), n_chunks + 1).astype(int)
    parts = Parallel(n_jobs=n_jobs)(
        delayed(func)(items[a:b], *args) for a, b in zip(bounds[:-1], bounds[1:]) if b > a)
    return [r for part in parts for r in part]


class CurrentScan(TransformerMixin, BaseEstimator):
    """Maps rows of parameter values to stationary read-out currents.

    Each column of ``X`` sets the parameter named in ``columns``; everything
    else comes from ``base_params``. ``transform`` returns ``I2`` with one
    column per entry of ``blocks``.

    Parameters
    ----------
    columns : sequence of str
        Names of the :class:`SystemParams` fields held in the columns of ``X``.
    base_params : SystemParams or dict, optional
    blocks : sequence of {0, 1}
    model, charge_mode, window, window_margin, steady_method
        Passed to :class:`MajoranaTransport`.
    n_jobs : int
        Worker processes; the output does not depend on it.

    Examples
    --------
    >>> phis = np.linspace(0, 2 * np.pi, 5)[:, None]
    >>> I = CurrentScan(columns=["phi"]).fit_transform(phis)
    """

    def __init__(self, columns=("phi",), base_params=None, blocks=(0, 1), model="full",
                 charge_mode="auto", window="auto", window_margin=1.5, steady_method="solve",
                 n_jobs=1):
        self.columns = columns
        self.base_params = base_params
        self.blocks = blocks
        self.model = model
        self.charge_mode = charge_mode
        self.window = window
        self.window_margin = window_margin
        self.steady_method = steady_method
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        cols = list(self.columns)
        unknown = [c for c in cols if c not in PARAM_NAMES]
        if unknown:
            raise ValueError(f"unknown parameter columns {unknown}; valid: {list(PARAM_NAMES)}")
        if len(set(cols)) != len(cols):
            raise ValueError("parameter columns must be distinct")
        if not self.blocks or any(b not in (0, 1) for b in self.blocks):
            raise ValueError("blocks must be a non-empty sequence of 0/1")
        base = self.base_params
        if base is None:
            base = SystemParams()
        elif isinstance(base, dict):
            base = SystemParams.from_dict(base)
        self.params_ = base
        self.n_features_in_ = len(cols)
        return self

    def scan(self, X):
        """Currents of shape ``(n_samples, len(blocks))`` and per-point diagnostics."""
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=float, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        kwargs = dict(model=self.model, charge_mode=self.charge_mode, window=self.window,
                      window_margin=self.window_margin, steady_method=self.steady_method)
        res = parallel_chunks(_chunk_currents, list(X), self.n_jobs, list(self.columns),
                              self.params_.to_dict(), tuple(self.blocks), kwargs)
        currents = np.array([r[0] for r in res], dtype=float).reshape(len(X), len(self.blocks))
        return currents, [r[1] for r in res]

    def transform(self, X):
        return self.scan(X)[0]
