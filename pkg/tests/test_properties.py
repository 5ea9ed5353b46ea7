"""Property-based invariants over random parameters."""

import numpy as np
from hypothesis import given, settings, strategies as st

from mbq.lindblad import (apply_generator, assemble_liouvillian, build_dissipators, fermi,
                          steady_state, trace_functional)
from mbq.model import (SystemParams, build_basis, build_effective_hamiltonian, build_hamiltonian,
                       build_mode_operators)
from mbq.numerics import Propagator, eig_general, eig_hermitian, solve_linear
from mbq.observables import current_operators, expectation, power_spectrum

BASIS = build_basis(0, "three")
OPS = build_mode_operators(BASIS)
SETTINGS = settings(max_examples=25, deadline=None)

small = st.floats(-0.2, 0.2, allow_nan=False)
coupling = st.builds(complex, small, small)
rate = st.floats(0.0, 0.05, allow_nan=False)
bias = st.floats(-0.2, 0.2, allow_nan=False)

params_st = st.builds(
    SystemParams,
    lambda0=coupling, lambda1=coupling, lambda2=coupling,
    phi=st.floats(0, 2 * np.pi), eps1=st.floats(-0.05, 0.05), eps2=st.floats(-0.05, 0.05),
    n_g=st.floats(-0.4, 0.4), Gamma1=rate, Gamma2=rate, mu1=bias, mu2=bias,
    T=st.one_of(st.just(0.0), st.floats(0.0, 0.5)),
)


def liouvillian(p):
    H = build_hamiltonian(p, BASIS, OPS)
    diss = build_dissipators(H, OPS.d1, OPS.d2, p)
    return H, diss, assemble_liouvillian(H, OPS.d1, OPS.d2, diss, BASIS.blocks)


def seeded(seed, n):
    r = np.random.default_rng(seed)
    A = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
    return A


@SETTINGS
@given(params_st)
def test_hamiltonian_hermitian_and_charge_conserving(p):
    H = build_hamiltonian(p, BASIS, OPS)
    assert np.max(np.abs(H - H.conj().T)) < 1e-14
    Q = np.diag(BASIS.total_charge()).real
    mask = Q[:, None] != Q[None, :]
    assert np.all(H[mask] == 0)


@SETTINGS
@given(params_st, st.integers(0, 2**32 - 1))
def test_generator_preserves_trace_and_hermiticity(p, seed):
    _, _, L = liouvillian(p)
    n = L.dim
    assert np.abs(trace_functional(n) @ L.G).max() < 1e-13
    A = seeded(seed, n)
    X = A + A.conj().T
    Y = L @ X
    assert np.max(np.abs(Y - Y.conj().T)) < 1e-13 * max(1.0, np.abs(Y).max())


@SETTINGS
@given(params_st, st.integers(0, 2**32 - 1))
def test_superoperator_matches_direct_evaluation(p, seed):
    H, diss, L = liouvillian(p)
    rho = seeded(seed, L.dim)
    np.testing.assert_allclose(L @ rho, apply_generator(rho, H, (OPS.d1, OPS.d2), diss),
                               atol=1e-13)


@SETTINGS
@given(params_st)
def test_no_growing_modes(p):
    _, _, L = liouvillian(p)
    w = np.linalg.eigvals(L.G)
    assert w.real.max() < 1e-10 * max(1.0, np.abs(w).max())


@SETTINGS
@given(params_st)
def test_hamiltonian_periodic_in_flux(p):
    H0 = build_hamiltonian(p, BASIS, OPS)
    H1 = build_hamiltonian(p.replace(phi=p.phi + 2 * np.pi), BASIS, OPS)
    np.testing.assert_allclose(H0, H1, atol=1e-14)
    for z in (1, -1):
        np.testing.assert_allclose(build_effective_hamiltonian(p, z),
                                   build_effective_hamiltonian(p.replace(phi=p.phi + 2 * np.pi), z),
                                   atol=1e-14)


@SETTINGS
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_propagator_semigroup(seed, t1, t2):
    n = 6
    A = seeded(seed, n) * 0.3
    A -= (np.abs(np.linalg.eigvals(A).real).max() + 0.1) * np.eye(n)
    v = seeded(seed + 1, n)[:, 0]
    prop = Propagator(A)
    np.testing.assert_allclose(prop(prop(v, t1), t2), prop(v, t1 + t2), rtol=1e-9, atol=1e-12)


@SETTINGS
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_eigensolvers_reconstruct(seed, n):
    A = seeded(seed, n)
    res = eig_general(A)
    np.testing.assert_allclose(A @ res.vectors, res.vectors * res.values, atol=1e-10 * n)
    Hm = A + A.conj().T
    h = eig_hermitian(Hm)
    assert np.all(np.diff(h.values) >= 0)
    np.testing.assert_allclose(h.vectors.conj().T @ h.vectors, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(h.vectors @ np.diag(h.values) @ h.vectors.conj().T, Hm,
                               atol=1e-11 * n)


@SETTINGS
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_solve_residual(seed, n):
    A = seeded(seed, n) + n * np.eye(n)
    b = seeded(seed + 7, n)[:, 0]
    x = solve_linear(A, b)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * (np.linalg.norm(A, 2) * np.linalg.norm(x)
                                                 + np.linalg.norm(b))


@SETTINGS
@given(st.floats(-1e3, 1e3), st.floats(-10, 10), st.floats(0, 10))
def test_fermi_bounded_and_reflection(eps, mu, T):
    f = fermi(eps, mu, T)
    assert 0.0 <= f <= 1.0
    g = fermi(2 * mu - eps, mu, T)
    assert abs(f + g - 1.0) < 1e-12


@settings(max_examples=10, deadline=None)
@given(params_st.filter(lambda p: p.Gamma1 > 1e-3 and p.Gamma2 > 1e-3),
       st.floats(0.0, 0.2))
def test_noise_even_in_frequency(p, w):
    _, diss, L = liouvillian(p)
    rho = steady_state(L, method="solve")
    I1, _ = current_operators((OPS.d1, OPS.d2), diss)
    S = power_spectrum(L, rho, I1, [w, -w]).values
    assert abs(S[0] - S[1]) <= 1e-9 * max(1.0, abs(S[0]))
    assert abs(np.trace(rho) - 1) < 1e-12
    assert abs(expectation(I1, rho).imag) < 1e-12
