"""Scenario runners producing plot-ready tables for each study.

Each runner returns a :class:`ScanResult` holding

* ``axes``: the sweep grids,
* ``values``: arrays keyed by ``(block, model)`` shaped like the grid,
* ``tables``: column tables destined for CSV files,
* ``diagnostics`` / ``failures``: per-point convergence checks,
* ``extras``: derived numbers (fitted rates, Fano factors, symmetry defects).

The effective four-state model always goes through the same Lindblad pipeline
as the full model; only the Hamiltonian and basis differ.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lindblad import ZERO_MODE_THRESHOLD, Liouvillian, restrict
from .model import (SystemParams, basis_for_gate_charge, build_effective_hamiltonian,
                    spectrum_vs_flux)
from .numerics import eig_general
from .observables import (FitError, TimeTrace, eigen_pair_coherence, fit_decay_rates, fit_modes,
                          log_slope_rate, qubit_coherence)
from .simulator import CurrentScan, MajoranaTransport

MODELS = ("full", "effective")
BLOCKS = (0, 1)

# per-point acceptance limits
POINT_LIMITS = {"residual": 1e-9, "trace_error": 1e-10, "hermiticity_defect": 1e-10,
                "current_sum": 1e-9}
POSITIVITY_LIMIT = 1e-8
TRAJECTORY_LIMITS = {"trace_error": 1e-9, "hermiticity_defect": 1e-10}


@dataclass
class Table:
    columns: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != len(self.columns):
            raise ValueError(f"table shape {self.data.shape} does not match "
                             f"{len(self.columns)} columns")


@dataclass
class RunSettings:
    """Numerical knobs shared by all runners."""

    charge_mode: str = "auto"
    window: str = "auto"
    window_margin: float = 1.5
    steady_method: str = "solve"
    gauge: str = "mirrored"
    block: int = 0
    n_jobs: int = 1

    def estimator_kwargs(self) -> dict:
        return dict(charge_mode=self.charge_mode, window=self.window,
                    window_margin=self.window_margin)


@dataclass
class ScanResult:
    scenario: str
    axes: dict
    params: SystemParams
    values: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    dims: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def add(self, key, arr, dims=()):
        """Store ``arr`` whose leading axes run over the grids named in ``dims``."""
        arr = np.asarray(arr)
        shape = tuple(len(self.axes[d]) for d in dims)
        if arr.shape[:len(shape)] != shape:
            raise ValueError(f"values {key} of shape {arr.shape} do not match grids {dims}={shape}")
        self.values[key] = arr
        self.dims[key] = tuple(dims)


# -- helpers ------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v))


def _collect_point_diagnostics(result: ScanResult, name: str, diags, shape):
    """Store per-point diagnostics as arrays and register tolerance failures."""
    keys = ("residual", "trace_error", "hermiticity_defect", "current_sum", "min_eigenvalue",
            "zero_mode_gap", "rcond", "mu1", "mu2")
    arrays = {}
    for k in keys:
        vals = [d.get(k) for d in diags]
        arrays[k] = np.array([np.nan if v is None else v for v in vals], dtype=float).reshape(shape)
    result.diagnostics[name] = arrays
    flat = {k: v.ravel() for k, v in arrays.items()}
    for k, limit in POINT_LIMITS.items():
        bad = np.flatnonzero(flat[k] > limit)
        if bad.size:
            result.failures.append(f"{name}: {k} exceeds {limit:g} at {bad.size} point(s), "
                                   f"worst {np.nanmax(flat[k]):.3e}")
    gap = flat["zero_mode_gap"]
    bad = np.flatnonzero(gap < ZERO_MODE_THRESHOLD)
    if bad.size:
        result.failures.append(f"{name}: zero-mode gap below threshold at {bad.size} point(s)")
    mins = flat["min_eigenvalue"]
    if np.nanmin(mins) < -POSITIVITY_LIMIT:
        result.warnings.append(f"{name}: stationary state has negative eigenvalues down to "
                               f"{np.nanmin(mins):.3e}")


def _trajectory_checks(result: ScanResult, name: str, diag: dict):
    result.diagnostics[name] = diag
    for k, limit in TRAJECTORY_LIMITS.items():
        if diag[k] > limit:
            result.failures.append(f"{name}: trajectory {k} {diag[k]:.3e} exceeds {limit:g}")
    if diag["min_eigenvalue"] < -POSITIVITY_LIMIT:
        result.warnings.append(f"{name}: trajectory min eigenvalue {diag['min_eigenvalue']:.3e}")


def _scan(params, columns, X, model, settings: RunSettings, blocks=BLOCKS, charge_mode=None):
    scan = CurrentScan(columns=columns, base_params=params, blocks=blocks, model=model,
                       charge_mode=charge_mode or settings.charge_mode, window=settings.window,
                       window_margin=settings.window_margin,
                       steady_method=settings.steady_method, n_jobs=settings.n_jobs).fit()
    return scan.scan(np.asarray(X, dtype=float).reshape(len(X), -1))


def _relative_modulation(I: np.ndarray) -> float:
    mean = float(np.mean(I))
    return float((I.max() - I.min()) / mean) if mean != 0 else np.inf


def slowest_rate(L, exclude_zero: bool = True) -> complex:
    """Non-zero Liouvillian eigenvalue with the smallest ``|Re|``."""
    w = eig_general(L.G, scale=L.norm).values
    if exclude_zero:
        w = w[np.abs(w) > ZERO_MODE_THRESHOLD * L.norm]
    return complex(w[np.argmin(np.abs(w.real))])


def coherence_sector(est: MajoranaTransport):
    """Restriction of a two-block Liouvillian to the ``rho_{0L,1L}`` sector."""
    L = est.liouvillian_
    i0, i1 = est.basis_.block_indices(0), est.basis_.block_indices(1)
    sel = (i1[None, :] * L.dim + i0[:, None]).ravel(order="F")
    return Liouvillian(L.G[np.ix_(sel, sel)], len(i0))


# -- runners ------------------------------------------------------------------

def run_spectrum(params: SystemParams, phi_grid, charge_mode: str = "auto") -> ScanResult:
    """Eigenenergies of each parity block versus flux, full and effective."""
    phis = np.asarray(phi_grid, dtype=float)
    res = ScanResult("spectrum", {"phi": phis}, params)
    mode = None if charge_mode == "auto" else charge_mode
    for b in BLOCKS:
        basis = basis_for_gate_charge(params.n_g, b, mode)
        E = spectrum_vs_flux(params, basis, phis).energies
        res.add((b, "full"), E, ("phi",))
        res.tables[f"spectrum_block{b}_full"] = Table(
            ["phi"] + [f"E{k + 1}" for k in range(E.shape[1])], np.column_stack([phis, E]))
        z = 1 if b == 0 else -1
        Eeff = np.array([np.linalg.eigvalsh(build_effective_hamiltonian(
            params.replace(phi=float(p)), z, shift=True)) for p in phis])
        res.add((b, "effective"), Eeff, ("phi",))
        res.tables[f"spectrum_block{b}_effective"] = Table(
            ["phi", "E1", "E2", "E3", "E4"], np.column_stack([phis, Eeff]))
        res.extras[f"max_low_energy_deviation_block{b}"] = float(np.abs(E[:, :4] - Eeff).max())
    return res


def transition_energies(params: SystemParams, block: int, k: int = 4) -> np.ndarray:
    """Addition energies ``E_m - E_n`` between low-energy eigenstates where ``m``
    holds one electron more than ``n``."""
    est = MajoranaTransport.from_params(params, block=block, window="fixed").fit()
    E, V = np.linalg.eigh(est.hamiltonian_)
    N = np.real(np.einsum("ij,jk,ki->i", V.conj().T, est.basis_.total_charge(), V))
    out = set()
    for m in range(k):
        for n in range(k):
            if abs(N[m] - N[n] - 1) < 1e-6:
                out.add(round(float(E[m] - E[n]), 14))
    return np.array(sorted(out))


def run_iv_narrow(params: SystemParams, mu2_grid, width: float = 0.01,
                  settings: RunSettings | None = None) -> ScanResult:
    """Stationary current with a narrow bias window ``mu1 = mu2 + width`` swept across
    the spectrum. The window is never widened here."""
    settings = settings or RunSettings()
    settings = RunSettings(**{**settings.__dict__, "window": "fixed"})
    mu2 = np.asarray(mu2_grid, dtype=float)
    res = ScanResult("iv", {"mu2": mu2}, params)
    X = np.column_stack([mu2 + width, mu2])
    for model in MODELS:
        I, diags = _scan(params, ["mu1", "mu2"], X, model, settings)
        for j, b in enumerate(BLOCKS):
            name = f"iv_block{b}_{model}"
            res.add((b, model), I[:, j], ("mu2",))
            res.tables[name] = Table(["mu2", "mu1", "I"], np.column_stack([mu2, mu2 + width,
                                                                          I[:, j]]))
            _collect_point_diagnostics(res, name, [d[j] for d in diags], mu2.shape)
    for b in BLOCKS:
        res.extras[f"transition_energies_block{b}"] = transition_energies(params, b).tolist()
    res.extras["width"] = width
    return res


def run_flux_sweep(params: SystemParams, phi_grid, lambda0_list=(0.01, 0.02, 0.05, 0.1),
                   settings: RunSettings | None = None) -> ScanResult:
    """Current versus flux for several dot-dot couplings, both models and blocks."""
    return _flux_family("flux", "lambda0", params, phi_grid, lambda0_list, settings)


def run_temperature_sweep(params: SystemParams, phi_grid, T_list=(0.0, 0.01, 0.05, 0.1, 0.5),
                          settings: RunSettings | None = None,
                          lambda0: float | None = 0.1) -> ScanResult:
    """Current versus flux at several temperatures (``lambda0 = 0.1`` by default)."""
    if lambda0 is not None:
        params = params.replace(lambda0=lambda0)
    res = _flux_family("temperature", "T", params, phi_grid, T_list, settings)
    phis = res.axes["phi"]
    for i, T in enumerate(res.axes["T"]):
        gap = np.abs(res.values[(0, "full")][i] - res.values[(0, "effective")][i]).max()
        res.extras[f"max_full_effective_gap[T={_fmt(T)}]"] = float(gap)
        for b in BLOCKS:
            I = res.values[(b, "full")][i]
            res.extras[f"argmax_phi[block={b},T={_fmt(T)}]"] = float(phis[np.argmax(I)])
            res.extras[f"argmin_phi[block={b},T={_fmt(T)}]"] = float(phis[np.argmin(I)])
    return res


def _flux_family(scenario, key, params, phi_grid, family, settings):
    settings = settings or RunSettings()
    phis = np.asarray(phi_grid, dtype=float)
    family = np.asarray(family, dtype=float)
    res = ScanResult(scenario, {key: family, "phi": phis}, params)
    K, P = np.meshgrid(family, phis, indexing="ij")
    X = np.column_stack([K.ravel(), P.ravel()])
    for model in MODELS:
        I, diags = _scan(params, [key, "phi"], X, model, settings)
        for j, b in enumerate(BLOCKS):
            name = f"{scenario}_block{b}_{model}"
            vals = I[:, j].reshape(K.shape)
            res.add((b, model), vals, (key, "phi"))
            cols = ["phi"] + [f"I[{key}={_fmt(v)}]" for v in family]
            res.tables[name] = Table(cols, np.column_stack([phis, vals.T]))
            _collect_point_diagnostics(res, name, [d[j] for d in diags], K.shape)
            for i, v in enumerate(family):
                res.extras[f"relative_modulation[block={b},model={model},{key}={_fmt(v)}]"] = \
                    _relative_modulation(vals[i])
    for i, v in enumerate(family):
        diff = res.values[(0, "effective")][i] - res.values[(0, "full")][i]
        res.extras[f"mean_effective_minus_full[{key}={_fmt(v)}]"] = float(diff.mean())
    return res


def _transient_analysis(est: MajoranaTransport, gamma: float) -> dict:
    I_stat = est.steady_current()[1]
    fast_t = np.linspace(0.0, 5.0 / gamma, 1001)
    resid = TimeTrace(fast_t, est.transient(fast_t).values - I_stat)
    out = {"I_stat": I_stat, "I2_initial": float(resid.values[0] + I_stat)}
    out["fast_rate"] = fit_decay_rates(TimeTrace(fast_t, np.abs(resid.values))).rates[0]
    modes = fit_modes(resid, 16)
    E = est.energies()
    out["quartet_splitting"] = float(E[3] - E[0])
    try:
        out["oscillation_frequency"] = abs(modes.dominant_oscillation(0.5 * est.params_.E_C).imag)
    except FitError:
        out["oscillation_frequency"] = np.nan
    hf = np.abs(modes.exponents.imag) > 0.5 * est.params_.E_C
    out["high_frequency_amplitude"] = float(np.abs(modes.amplitudes[hf]).max()) if hf.any() else 0.0
    tail_t = np.linspace(5.0 / gamma, 200.0 / gamma, 401)
    tail = np.abs(est.transient(tail_t).values - I_stat)
    out["liouvillian_slowest_rate"] = -slowest_rate(est.liouvillian_).real
    # drop samples that have reached the round-off floor
    keep = tail > 1e-9 * tail.max()
    try:
        fit = fit_decay_rates(TimeTrace(tail_t[keep], tail[keep]), n_exp=2)
        out["tail_rates"] = fit.rates
        out["slow_rate"] = fit.rates[-1]
    except FitError:
        out["tail_rates"], out["slow_rate"] = [], np.nan
    return out


def run_readout_transient(params: SystemParams, t_grid, settings: RunSettings | None = None,
                          analyse: bool = True) -> ScanResult:
    """``I2(t)`` after switching on the read-out, starting from the island ground state
    with empty dots; also exports ``|I2(t) - I_stat|``."""
    settings = settings or RunSettings()
    t = np.asarray(t_grid, dtype=float)
    res = ScanResult("transient", {"t": t}, params)
    gamma = 0.5 * (params.Gamma1 + params.Gamma2)
    for model in MODELS:
        for b in BLOCKS:
            est = MajoranaTransport.from_params(params, block=b, model=model,
                                                **settings.estimator_kwargs()).fit()
            I = est.transient(t).values
            I_stat = est.steady_current()[1]
            name = f"transient_block{b}_{model}"
            res.add((b, model), I, ("t",))
            res.tables[name] = Table(["t", "I2", "abs_residual"],
                                     np.column_stack([t, I, np.abs(I - I_stat)]))
            _trajectory_checks(res, name, est.evolve(t, check=False).diagnostics())
            if analyse:
                res.extras[f"block{b}_{model}"] = _transient_analysis(est, gamma)
    return res


def run_dephasing(params: SystemParams, t_grid, lambda0_list=(0.0, 0.001, 0.1),
                  settings: RunSettings | None = None, analyse: bool = True) -> ScanResult:
    """Decay of the qubit coherence from the equal superposition of the two blocks."""
    settings = settings or RunSettings()
    t = np.asarray(t_grid, dtype=float)
    lams = np.asarray(lambda0_list, dtype=float)
    res = ScanResult("dephasing", {"lambda0": lams, "t": t}, params)
    gamma = 0.5 * (params.Gamma1 + params.Gamma2)
    for model in MODELS:
        prod = np.empty((lams.size, t.size))
        eig = np.empty_like(prod)
        for i, lam in enumerate(lams):
            est = MajoranaTransport.from_params(
                params.replace(lambda0=float(lam)), block="both", model=model,
                gauge=settings.gauge, **settings.estimator_kwargs()).fit()
            traj = est.evolve(t, check=False)
            prod[i] = [abs(qubit_coherence(r, est.basis_)) for r in traj.states]
            eig[i] = [eigen_pair_coherence(r, est.hamiltonian_, est.basis_) for r in traj.states]
            _trajectory_checks(res, f"dephasing_{model}[lambda0={_fmt(lam)}]",
                               traj.diagnostics())
            if analyse:
                res.extras[f"{model}[lambda0={_fmt(lam)}]"] = _dephasing_analysis(
                    est, gamma, float(lam))
        res.add(("both", model), prod, ("lambda0", "t"))
        res.add(("both", model + "_eigenpair"), eig, ("lambda0", "t"))
        cols = (["t"] + [f"coherence[lambda0={_fmt(v)}]" for v in lams]
                + [f"eigenpair_coherence[lambda0={_fmt(v)}]" for v in lams])
        res.tables[f"dephasing_{model}"] = Table(cols, np.column_stack([t, prod.T, eig.T]))
    res.extras["gauge"] = settings.gauge
    return res


def _dephasing_analysis(est: MajoranaTransport, gamma: float, lam: float) -> dict:
    t = np.linspace(0.0, 200.0 / gamma, 2001)
    traj = est.evolve(t, est.initial_state(), check=False)
    c = np.array([qubit_coherence(r, est.basis_) for r in traj.states])
    out = {"telegraph_rate": lam ** 2 / gamma,
           "coherence_sector_slowest_rate": -slowest_rate(coherence_sector(est),
                                                          exclude_zero=False).real}
    late = t >= 10.0 / gamma
    out["coherence_at_10_over_gamma"] = float(abs(c[late][0]))
    # slowest significant mode of the late coherence; a plateau shows up as a
    # mode with vanishing rate
    modes = fit_modes(TimeTrace(t[late], c[late]), 6)
    amp = np.abs(modes.amplitudes)
    sig = amp > 1e-3 * amp.max()
    rates = -modes.exponents.real[sig]
    out["slow_rate"] = float(rates[np.argmin(np.abs(rates))])
    out["late_modes"] = [[float(z.real), float(z.imag), float(abs(a_))]
                         for z, a_ in zip(modes.exponents, modes.amplitudes)]
    mag = np.abs(c[late])
    out["late_log_slope_rate"] = (log_slope_rate(TimeTrace(t[late], mag))
                                  if np.all(mag > 0) else np.nan)
    early = t <= 5.0 / gamma
    excess = np.abs(np.abs(c[early]) - abs(c[late][0]))
    ok = excess > 0
    try:
        out["fast_rate"] = fit_decay_rates(TimeTrace(t[early][ok], excess[ok])).rates[0]
    except FitError:
        out["fast_rate"] = np.nan
    return out


DEFAULT_VARIANTS = ((0.01, 0.01), (0.02, 0.01), (0.05, 0.01), (0.1, 0.01),
                    (0.1, 0.005), (0.1, 0.02))


def run_correlation_psd(params: SystemParams, t_grid, omega_grid, variants=DEFAULT_VARIANTS,
                        settings: RunSettings | None = None, what=("correlation", "psd"),
                        analyse: bool = True) -> ScanResult:
    """Current correlation function and symmetrised noise spectrum for a list of
    ``(lambda0, Gamma)`` variants (``Gamma1 = Gamma2 = Gamma``)."""
    settings = settings or RunSettings()
    t = np.asarray(t_grid, dtype=float)
    omegas = np.asarray(omega_grid, dtype=float)
    variants = [tuple(map(float, v)) for v in variants]
    axes = {"variant": np.arange(len(variants))}
    if "correlation" in what:
        axes["t"] = t
    if "psd" in what:
        axes["omega"] = omegas
    res = ScanResult("correlation" if "psd" not in what else "psd", axes, params)
    b = settings.block
    for model in MODELS:
        C_all, S_all = [], []
        for lam, gam in variants:
            p = params.replace(lambda0=lam, Gamma1=gam, Gamma2=gam)
            est = MajoranaTransport.from_params(p, block=b, model=model,
                                                steady_method="eig",
                                                **settings.estimator_kwargs()).fit()
            tag = f"lambda0={_fmt(lam)}_Gamma={_fmt(gam)}"
            info = {"I": est.steady_current()[1], "fano_factor": est.fano_factor(),
                    "quartet_splitting": float(est.energies()[3] - est.energies()[0])}
            if "correlation" in what:
                C = est.correlation(t).values
                C_all.append(C.real)
                res.tables[f"correlation_block{b}_{model}_{tag}"] = Table(
                    ["t", "value_re", "value_im"], np.column_stack([t, C.real, C.imag]))
            if "psd" in what:
                S = est.power_spectrum(omegas)
                S_all.append(S.values)
                res.tables[f"psd_block{b}_{model}_{tag}"] = Table(
                    ["omega", "S"], np.column_stack([omegas, S.values]))
            if analyse:
                info.update(_correlation_analysis(est, gam))
            res.extras[f"{model}_{tag}"] = info
        if C_all:
            res.add((b, model + "_correlation"), np.array(C_all), ("variant", "t"))
        if S_all:
            res.add((b, model + "_psd"), np.array(S_all), ("variant", "omega"))
    res.extras["self_correlation_term"] = False
    res.extras["variants"] = [list(v) for v in variants]
    return res


def _correlation_analysis(est: MajoranaTransport, gamma: float) -> dict:
    t = np.linspace(0.0, 5.0 / gamma, 1001)
    C = est.correlation(t)
    modes = fit_modes(TimeTrace(t, C.values.real), 16)
    out = {"C0": float(C.values[0].real)}
    try:
        out["oscillation_frequency"] = abs(modes.dominant_oscillation(0.5 * est.params_.E_C).imag)
    except FitError:
        out["oscillation_frequency"] = np.nan
    hf = np.abs(modes.exponents.imag) > 0.5 * est.params_.E_C
    amp = np.abs(modes.amplitudes)
    out["high_frequency_weight"] = float(amp[hf].max() / amp.max()) if hf.any() else 0.0
    out["high_frequency"] = float(np.abs(modes.exponents[hf].imag).max()) if hf.any() else 0.0
    return out


def run_ng_flux_map(params: SystemParams, ng_grid, phi_grid,
                    settings: RunSettings | None = None) -> ScanResult:
    """Two-dimensional current map versus gate charge and flux (four charge states)."""
    settings = settings or RunSettings()
    ngs = np.asarray(ng_grid, dtype=float)
    phis = np.asarray(phi_grid, dtype=float)
    res = ScanResult("ng-map", {"n_g": ngs, "phi": phis}, params)
    NG, P = np.meshgrid(ngs, phis, indexing="ij")
    I, diags = _scan(params, ["n_g", "phi"], np.column_stack([NG.ravel(), P.ravel()]), "full",
                     settings, charge_mode="four")
    for j, b in enumerate(BLOCKS):
        name = f"ng-map_block{b}_full"
        vals = I[:, j].reshape(NG.shape)
        res.add((b, "full"), vals, ("n_g", "phi"))
        res.tables[name] = Table(["n_g", "phi", "I"], np.column_stack([NG.ravel(), P.ravel(),
                                                                       vals.ravel()]))
        _collect_point_diagnostics(res, name, [d[j] for d in diags], NG.shape)
        # rows two gate-charge units apart, when on the grid
        shift = _grid_shift(ngs, 2.0)
        if shift:
            res.extras[f"period2_defect_block{b}"] = float(np.abs(vals[shift:] - vals[:-shift]).max())
        half = np.flatnonzero(np.isclose(np.mod(ngs, 1.0), 0.5))
        if half.size:
            res.extras[f"half_integer_relative_modulation_block{b}"] = max(
                _relative_modulation(vals[i]) for i in half)
    shift1 = _grid_shift(ngs, 1.0)
    pshift = _grid_shift(phis, np.pi)
    if shift1 and pshift:
        a = res.values[(0, "full")][shift1:, :-pshift]
        c = res.values[(0, "full")][:-shift1, pshift:]
        res.extras["crossover_defect"] = float(np.abs(a - c).max())
    return res


def _grid_shift(grid: np.ndarray, delta: float) -> int:
    if grid.size < 2:
        return 0
    step = np.diff(grid)
    if not np.allclose(step, step[0]):
        return 0
    k = delta / step[0]
    return int(round(k)) if abs(k - round(k)) < 1e-9 and 0 < round(k) < grid.size else 0


DETUNING_PATTERNS = ("independent", "joint", "antisymmetric", "single")


def run_dot_detuning(params: SystemParams, eps_grid, pattern: str = "independent",
                     settings: RunSettings | None = None) -> ScanResult:
    """Current versus dot level detuning.

    ``pattern`` selects an ``(eps1, eps2)`` map ("independent") or a line:
    ``eps1 = eps2`` ("joint"), ``eps1 = -eps2`` ("antisymmetric") or ``eps1``
    alone ("single").
    """
    if pattern not in DETUNING_PATTERNS:
        raise ValueError(f"pattern must be one of {DETUNING_PATTERNS}")
    settings = settings or RunSettings()
    eps = np.asarray(eps_grid, dtype=float)
    if pattern == "independent":
        axes = {"eps1": eps, "eps2": eps}
        E1, E2 = np.meshgrid(eps, eps, indexing="ij")
        X = np.column_stack([E1.ravel(), E2.ravel()])
        shape = E1.shape
    else:
        axes = {"eps": eps}
        other = {"joint": eps, "antisymmetric": -eps, "single": np.zeros_like(eps)}[pattern]
        X = np.column_stack([eps, other])
        shape = eps.shape
    res = ScanResult("detuning", axes, params)
    for model in MODELS:
        I, diags = _scan(params, ["eps1", "eps2"], X, model, settings)
        for j, b in enumerate(BLOCKS):
            name = f"detuning_block{b}_{model}"
            vals = I[:, j].reshape(shape)
            res.add((b, model), vals, tuple(axes))
            res.tables[name] = Table(["eps1", "eps2", "I"], np.column_stack([X, I[:, j]]))
            _collect_point_diagnostics(res, name, [d[j] for d in diags], shape)
            if pattern == "independent" and np.allclose(eps, -eps[::-1]):
                # (eps1, eps2) -> (-eps2, -eps1) is an exact symmetry of the model
                res.extras[f"mirror_swap_defect[block={b},model={model}]"] = float(
                    np.abs(vals - vals[::-1, ::-1].T).max())
                res.extras[f"plain_swap_defect[block={b},model={model}]"] = float(
                    np.abs(vals - vals.T).max())
    res.extras["pattern"] = pattern
    return res


def run_liouvillian_spectrum(params: SystemParams, settings: RunSettings | None = None) -> ScanResult:
    """Full Liouvillian spectra per block and model, plus the zero-mode count of the
    two-block generator."""
    settings = settings or RunSettings()
    res = ScanResult("liouvillian-spectrum", {}, params)
    for model in MODELS:
        est = MajoranaTransport.from_params(params, block="both", model=model,
                                            gauge=settings.gauge,
                                            **settings.estimator_kwargs()).fit()
        L = est.liouvillian_
        w_all = eig_general(L.G, scale=L.norm).values
        res.extras[f"zero_modes_both_blocks_{model}"] = int(
            np.sum(np.abs(w_all) < ZERO_MODE_THRESHOLD * L.norm))
        res.extras[f"max_real_part_{model}"] = float(w_all.real.max())
        for b in BLOCKS:
            sub = restrict(L, est.basis_.block_indices(b))
            w = eig_general(sub.G, scale=sub.norm).values
            w = w[np.lexsort((np.abs(w.imag), np.abs(w.real)))]
            res.add((b, model), w)
            res.tables[f"liouvillian_block{b}_{model}"] = Table(
                ["index", "re", "im"], np.column_stack([np.arange(w.size), w.real, w.imag]))
            res.extras[f"slowest_rate_block{b}_{model}"] = -slowest_rate(sub).real
        res.extras[f"coherence_sector_slowest_rate_{model}"] = -slowest_rate(
            coherence_sector(est), exclude_zero=False).real
    return res
