import numpy as np
import pytest

from mbq import MajoranaTransport, SystemParams
from mbq.lindblad import (AmbiguousSteadyStateError, assemble_liouvillian, build_dissipators,
                          propagate)
from mbq.model import build_basis, build_hamiltonian, build_mode_operators
from mbq.observables import (FitError, TimeTrace, current_operator, current_operators,
                             expectation, fit_decay_rates, fit_modes, intra_block_coherence,
                             log_slope_rate, qubit_coherence)

from conftest import random_density


def test_current_operator_vanishes_without_coupling(params):
    basis = build_basis(0, "three")
    ops = build_mode_operators(basis)
    H = build_hamiltonian(params, basis, ops)
    diss = build_dissipators(H, ops.d1, ops.d2, params.replace(Gamma2=0))
    I1, I2 = current_operators((ops.d1, ops.d2), diss)
    assert np.abs(I2).max() == 0
    assert np.abs(I1 - I1.conj().T).max() < 1e-15


def test_high_temperature_current(params, rng):
    basis = build_basis(0, "three")
    ops = build_mode_operators(basis)
    H = build_hamiltonian(params, basis, ops)
    p = params.replace(T=1e9, Gamma2=0.02)
    diss = build_dissipators(H, ops.d1, ops.d2, p)
    I2 = current_operator(ops.d2, diss.Dp[1], diss.Dm[1])
    rho = random_density(rng, basis.dim)
    n2 = expectation(ops.d2.conj().T @ ops.d2, rho).real
    assert abs(expectation(I2, rho).real - 0.02 * (n2 - 0.5)) < 1e-12


def test_no_current_without_transport_path():
    # the uncoupled island has several zero modes, so propagate instead
    with pytest.raises(AmbiguousSteadyStateError):
        MajoranaTransport(lambda0=0, lambda1=0, lambda2=0, window="fixed").fit()
    p = SystemParams(lambda0=0, lambda1=0, lambda2=0)
    basis = build_basis(0, "three")
    ops = build_mode_operators(basis)
    H = build_hamiltonian(p, basis, ops)
    diss = build_dissipators(H, ops.d1, ops.d2, p)
    L = assemble_liouvillian(H, ops.d1, ops.d2, diss)
    rho0 = np.zeros((12, 12), dtype=complex)
    rho0[0, 0] = 1
    final = propagate(L, rho0, [0.0, 1e4]).states[-1]
    I2 = current_operators((ops.d1, ops.d2), diss)[1]
    assert abs(expectation(I2, final)) < 1e-12


def test_currents_balance_in_steady_state():
    for kwargs in ({}, {"lambda0": 0.05, "phi": 1.0, "T": 0.02}, {"eps1": 0.004, "block": 1}):
        I1, I2 = MajoranaTransport(**kwargs).fit().steady_current()
        assert abs(I1 + I2) < 1e-9
        assert I2 > 0


def test_initial_transient_current_is_filling_only():
    est = MajoranaTransport().fit()
    rho0 = est.initial_state()
    d2 = est.jump_ops_[1]
    Dp = est.dissipators_.Dp[1]
    expected = -np.trace(Dp @ d2.conj().T @ rho0).real
    assert abs(est.transient([0.0]).values[0] - expected) < 1e-15
    assert expected < 0


def test_qubit_coherence_examples():
    basis = build_basis("both", "three")
    psi = np.zeros(basis.dim)
    psi[[0, 12]] = 1 / np.sqrt(2)
    assert abs(qubit_coherence(np.outer(psi, psi), basis) - 0.5) < 1e-15
    block_diag = np.zeros((24, 24))
    block_diag[0, 0] = block_diag[12, 12] = 0.5
    assert qubit_coherence(block_diag, basis) == 0
    with pytest.raises(ValueError):
        qubit_coherence(np.eye(12), build_basis(0, "three"))


def test_intra_block_coherence():
    est = MajoranaTransport().fit()
    rho, H = est.rho_stat_, est.hamiltonian_
    # environment-dominated stationary state keeps a coherence between levels 1 and 4
    c14 = abs(intra_block_coherence(rho, H, 1, 4))
    assert c14 > 0.05
    pops = [intra_block_coherence(rho, H, m, m, k=12).real for m in range(1, 13)]
    assert abs(sum(pops) - 1) < 1e-12
    with pytest.raises(ValueError):
        intra_block_coherence(rho, H, 1, 5)
    slow = MajoranaTransport(Gamma1=1e-5, Gamma2=1e-5).fit()
    c14_slow = abs(intra_block_coherence(slow.rho_stat_, slow.hamiltonian_, 1, 4))
    assert c14_slow < 2e-3 * c14


def test_weighted_average_of_block_currents():
    est = MajoranaTransport(block="both", lambda0=0.02, gauge="mirrored").fit()
    I = {b: est.steady_current(b)[1] for b in (0, 1)}
    I2 = est.current_ops_[1]
    ground = est.initial_state(0), est.initial_state(1)
    for w in (0.0, 0.25, 0.5, 1.0):
        rho0 = (1 - w) * ground[0] + w * ground[1]
        final = est.evolve([0.0, 1e6], rho0, check=False).states[-1]
        assert abs(expectation(I2, final).real - ((1 - w) * I[0] + w * I[1])) < 1e-10


def test_correlation_properties():
    est = MajoranaTransport(lambda0=0.1).fit()
    C = est.correlation([0.0, 1e6])
    assert C.values[0].real >= 0
    assert abs(C.values[1]) < 1e-8
    S = est.power_spectrum(np.linspace(-0.3, 0.3, 31)).values
    assert np.abs(S - S[::-1]).max() < 1e-8
    assert est.fano_factor() < 1


def test_power_spectrum_diagnostics_flag():
    est = MajoranaTransport().fit()
    spec = est.power_spectrum([0.0])
    assert spec.diagnostics == {"self_correlation_term": False}


def test_fit_decay_single_exponential():
    t = np.linspace(0, 5, 200)
    fit = fit_decay_rates(TimeTrace(t, np.exp(-t)))
    assert abs(fit.rates[0] - 1) < 0.01


def test_fit_decay_two_exponentials():
    t = np.linspace(0, 400, 4001)
    y = 0.8 * np.exp(-t) + 0.2 * np.exp(-0.01 * t)
    rates = fit_decay_rates(TimeTrace(t, y), n_exp=2).rates
    assert abs(rates[0] - 1) < 0.05 and abs(rates[1] - 0.01) < 0.05 * 0.01


def test_fit_decay_errors():
    t = np.linspace(0, 1, 10)
    with pytest.raises(FitError):
        fit_decay_rates(TimeTrace(t, np.ones(10)), offset=1.0)
    with pytest.raises(FitError):
        fit_decay_rates(TimeTrace(t[:2], np.ones(2)))


def test_fit_modes_recovers_damped_oscillation():
    t = np.linspace(0, 200, 801)
    y = 0.7 * np.exp((-0.01 + 0.3j) * t) + 0.3 * np.exp(-0.002 * t)
    fit = fit_modes(TimeTrace(t, y), 2)
    s = sorted(fit.exponents, key=lambda z: abs(z.imag))
    assert abs(s[0] - (-0.002)) < 1e-8 and abs(s[1] - (-0.01 + 0.3j)) < 1e-8
    assert abs(fit.dominant_oscillation() - (-0.01 + 0.3j)) < 1e-8
    with pytest.raises(FitError):
        fit.dominant_oscillation(max_frequency=0.1)
    with pytest.raises(FitError):
        fit_modes(TimeTrace(t[[0, 1, 3, 4, 5, 6, 7]], y[[0, 1, 3, 4, 5, 6, 7]]), 2)


def test_log_slope_rate():
    t = np.linspace(0, 10, 50)
    assert abs(log_slope_rate(TimeTrace(t, 3 * np.exp(-0.2 * t))) - 0.2) < 1e-12
    with pytest.raises(FitError):
        log_slope_rate(TimeTrace(t, np.zeros(50)))


def test_time_trace_validation():
    with pytest.raises(ValueError):
        TimeTrace([0, 1], [1.0])
    with pytest.raises(ValueError):
        TimeTrace([0, np.nan], [1.0, 2.0])
    tr = TimeTrace(np.arange(5.0), np.arange(5.0)).window(1, 3)
    np.testing.assert_array_equal(tr.times, [1, 2, 3])
