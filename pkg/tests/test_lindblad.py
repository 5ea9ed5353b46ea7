import warnings

import numpy as np
import pytest

from mbq import MajoranaTransport
from mbq.lindblad import (AmbiguousSteadyStateError, PositivityWarning, apply_generator,
                          assemble_liouvillian, build_dissipators, fermi, left, liouvillian_spectrum,
                          propagate, restrict, right, sandwich, steady_state,
                          steady_state_per_block, trace_functional, unvec, vec, zero_modes)
from mbq.model import BasisState, SystemParams, build_basis, build_hamiltonian, build_mode_operators

from conftest import random_density, random_hermitian


def system(params, block=0, mode="three"):
    basis = build_basis(block, mode)
    ops = build_mode_operators(basis)
    H = build_hamiltonian(params, basis, ops)
    diss = build_dissipators(H, ops.d1, ops.d2, params)
    return basis, ops, H, diss, assemble_liouvillian(H, ops.d1, ops.d2, diss, basis.blocks)


def test_vectorisation_convention(rng):
    A, X, B = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    np.testing.assert_allclose(vec(X), X.T.ravel())
    np.testing.assert_allclose(unvec(vec(X)), X)
    np.testing.assert_allclose(left(A) @ vec(X), vec(A @ X))
    np.testing.assert_allclose(right(B) @ vec(X), vec(X @ B))
    np.testing.assert_allclose(sandwich(A, B) @ vec(X), vec(A @ X @ B))
    np.testing.assert_allclose(sandwich(A, B), left(A) @ right(B))


def test_fermi_examples(rng):
    assert fermi(0.0, 0.0, 0.3) == 0.5
    assert fermi(0.0, 0.0, 0.0) == 0.5
    assert fermi(-1.0, 0.0, 0.0) == 1.0 and fermi(1.0, 0.0, 0.0) == 0.0
    eps = rng.normal(size=20)
    for T in (0.0, 0.05, 2.0):
        f = fermi(eps, 0.1, T)
        assert np.all((f >= 0) & (f <= 1))
        np.testing.assert_allclose(f + (1 - f), 1.0)
    assert fermi(1e3, 0.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        fermi(0.0, 0.0, -1.0)


def test_dissipator_limits(params):
    basis = build_basis(0, "three")
    ops = build_mode_operators(basis)
    H = build_hamiltonian(params, basis, ops)
    zero = build_dissipators(H, ops.d1, ops.d2, params.replace(Gamma1=0, Gamma2=0))
    assert all(np.abs(D).max() == 0 for D in zero.Dp + zero.Dm)
    hot = build_dissipators(H, ops.d1, ops.d2, params.replace(T=1e9))
    for d, Dp, Dm, g in zip((ops.d1, ops.d2), hot.Dp, hot.Dm, (0.01, 0.01)):
        np.testing.assert_allclose(Dp, g / 2 * d, atol=1e-12)
        np.testing.assert_allclose(Dm, g / 2 * d, atol=1e-12)
    cold = build_dissipators(H, ops.d1, ops.d2, params.replace(mu1=-10.0, mu2=-10.0))
    for d, Dp, Dm in zip((ops.d1, ops.d2), cold.Dp, cold.Dm):
        assert np.abs(Dp).max() < 1e-15
        np.testing.assert_allclose(Dm, 0.01 * d, atol=1e-14)


def test_closed_system_limit(params, rng):
    basis, ops, H, diss, L = system(params.replace(Gamma1=0, Gamma2=0))
    rho = random_hermitian(rng, basis.dim)
    np.testing.assert_allclose(L @ rho, -1j * (H @ rho - rho @ H), atol=1e-14)


def test_trace_preservation(params):
    _, _, _, _, L = system(params.replace(T=0.02, phi=0.4))
    assert np.abs(trace_functional(L.dim) @ L.G).max() < 1e-10


def test_superoperator_matches_direct_evaluation(params, rng):
    p = params.replace(lambda0=0.03 * np.exp(0.2j), phi=1.3, T=0.01, eps1=0.004)
    basis, ops, H, diss, L = system(p, "both")
    for _ in range(20):
        rho = random_hermitian(rng, basis.dim)
        direct = apply_generator(rho, H, (ops.d1, ops.d2), diss)
        assert np.abs(L @ rho - direct).max() < 1e-12
    # the linear extension also holds for non-Hermitian input
    X = rng.normal(size=(basis.dim, basis.dim)) + 1j * rng.normal(size=(basis.dim, basis.dim))
    assert np.abs(L @ X - apply_generator(X, H, (ops.d1, ops.d2), diss)).max() < 1e-12


def test_hermiticity_preservation(params, rng):
    _, _, _, _, L = system(params.replace(T=0.03), "both")
    for _ in range(5):
        out = L @ random_hermitian(rng, L.dim)
        assert np.abs(out - out.conj().T).max() < 1e-12


def test_block_sectors_not_mixed(params, rng):
    basis, _, _, _, L = system(params.replace(phi=0.9, T=0.02), "both")
    i0, i1 = basis.block_indices(0), basis.block_indices(1)
    sectors = [(i0, i0), (i1, i1), (i0, i1), (i1, i0)]
    for rows, cols in sectors:
        X = np.zeros((L.dim, L.dim), dtype=complex)
        X[np.ix_(rows, cols)] = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
        out = L @ X
        out[np.ix_(rows, cols)] = 0
        assert np.abs(out).max() < 1e-12


def test_single_block_has_one_zero_mode(params):
    _, _, _, _, L = system(params)
    eig, mask = zero_modes(L)
    assert mask.sum() == 1
    w = liouvillian_spectrum(L)
    assert abs(w[0]) < 1e-10 * L.norm
    assert w.real.max() <= 1e-9
    assert np.sum(np.abs(w.real) > 0.1 * 0.01) > 10


def test_two_blocks_ambiguous(params):
    _, _, _, _, L = system(params, "both")
    assert zero_modes(L)[1].sum() == 2
    for method in ("eig", "solve"):
        with pytest.raises(AmbiguousSteadyStateError, match="block"):
            steady_state(L, method=method)
    rhos = steady_state_per_block(L)
    assert set(rhos) == {0, 1}
    for b, rho in rhos.items():
        assert abs(np.trace(rho) - 1) < 1e-12
        assert np.linalg.norm(L.G @ vec(rho)) < 1e-9 * L.norm


def test_steady_state_methods_agree(params):
    for p in (params, params.replace(lambda0=0.07, phi=2.0, T=0.03, eps2=0.003)):
        _, _, _, _, L = system(p)
        a, ia = steady_state(L, method="eig", return_info=True)
        b, ib = steady_state(L, method="solve", return_info=True)
        assert np.abs(a - b).max() < 1e-11
        assert ia.residual < 1e-12 and ib.residual < 1e-12
        assert ia.zero_mode_gap > 1e-5 and ib.rcond > 1e-12
    with pytest.raises(ValueError):
        steady_state(L, method="qr")


def test_uncoupled_island_relaxes_dots_only(params):
    # the island factor stays put while dot 1 fills (mu1 > 0) and dot 2 empties
    p = params.replace(lambda0=0, lambda1=0, lambda2=0)
    basis, _, _, _, L = system(p)
    assert zero_modes(L)[1].sum() > 1
    start = basis.find(BasisState(0, 1, 1, 0, 0, 0))
    rho0 = np.zeros((basis.dim, basis.dim), dtype=complex)
    rho0[start, start] = 1.0
    final = propagate(L, rho0, [0, 100 / 0.01]).states[-1]
    target = np.zeros_like(rho0)
    j = basis.find(BasisState(0, 1, 1, 0, 1, 0))
    target[j, j] = 1.0
    assert np.abs(final - target).max() < 1e-7


def test_steady_state_independent_of_initial_state(params, rng):
    est = MajoranaTransport(block=0, model="effective").fit()
    L = est.liouvillian_
    for _ in range(5):
        rho0 = random_density(rng, L.dim)
        final = est.evolve([0.0, 100 / 0.01], rho0, check=False).states[-1]
        assert np.abs(final - est.rho_stat_).max() < 1e-7


def test_propagation_trace_and_initial_value(params, rng):
    _, _, _, _, L = system(params)
    rho0 = random_density(rng, L.dim)
    times = np.linspace(0, 500, 11)
    traj = propagate(L, rho0, times, check=False)
    np.testing.assert_allclose(traj.states[0], rho0)
    d = traj.diagnostics()
    assert d["trace_error"] < 1e-9 and d["hermiticity_defect"] < 1e-10
    with pytest.raises(ValueError):
        propagate(L, rho0, [1.0, 0.5])


def test_positivity_warning_channel(params):
    _, _, _, _, L = system(params)
    bad = np.diag(np.r_[1.5, -0.5, np.zeros(L.dim - 2)]).astype(complex)
    with pytest.warns(PositivityWarning):
        propagate(L, bad, [0.0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        propagate(L, bad, [0.0], check=False)


def test_zero_temperature_limit(params):
    p = params.replace(lambda0=0.03, phi=0.5)
    _, _, _, _, L0 = system(p)
    _, _, _, _, L1 = system(p.replace(T=1e-6))
    assert np.abs(L0.G - L1.G).max() < 1e-6


def test_restrict_agrees_with_single_block(params):
    _, _, _, _, Lboth = system(params, "both")
    basis, _, _, _, L1 = system(params, 1)
    sub = restrict(Lboth, np.arange(12, 24))
    np.testing.assert_allclose(sub.G, L1.G, atol=1e-15)


def test_norm_estimate_is_lower_bound(params):
    _, _, _, _, L = system(params)
    assert 0.5 * L.norm < L.norm_estimate <= L.norm * (1 + 1e-12)
