"""Basis states, fermionic operators and Hamiltonians of the Majorana box
qubit coupled to two quantum dots.

Energies are in units of the charging energy (``E_C = 1`` by default) with
``hbar = e = k_B = 1``. Only offsets of the island charge and Cooper-pair
number from an even reference ``N_ref = 2 n0_ref`` are stored.

Canonical basis order: parity block (``0_L`` then ``1_L``), island state
(ground, ``N+1``, ``N-1``, then the optional ``N+2``/``N-2`` state), dot
occupations ``|0,0>, |0,1>, |1,0>, |1,1>``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple

import numpy as np

from .numerics import eig_hermitian, hermiticity_defect


class ConstructionError(RuntimeError):
    """An operator failed a self-consistency check (sign-convention bug)."""


@dataclass(frozen=True)
class SystemParams:
    E_C: float = 1.0
    lambda0: complex = 0.01
    lambda1: complex = 0.1
    lambda2: complex = 0.1
    phi: float = 0.0
    eps1: float = 0.0
    eps2: float = 0.0
    n_g: float = 0.0
    Gamma1: float = 0.01
    Gamma2: float = 0.01
    mu1: float = 0.05
    mu2: float = -0.05
    T: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if not np.isfinite(getattr(self, f.name)):
                raise ValueError(f"parameter {f.name} must be finite")
        if self.E_C <= 0:
            raise ValueError("E_C must be positive")
        if self.Gamma1 < 0 or self.Gamma2 < 0:
            raise ValueError("tunneling rates must be non-negative")
        if self.T < 0:
            raise ValueError("temperature must be non-negative")

    def replace(self, **changes) -> SystemParams:
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> SystemParams:
        """Inverse of :meth:`to_dict`; ``[re, im]`` pairs become complex numbers."""
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ValueError(f"unknown parameters {unknown}; valid: {sorted(names)}")
        conv = {k: complex(*v) if isinstance(v, (list, tuple)) else v for k, v in data.items()}
        return cls(**conv)

    def to_dict(self) -> dict:
        out = {}
        for key, value in asdict(self).items():
            if isinstance(value, complex):
                value = value.real if value.imag == 0 else [value.real, value.imag]
            out[key] = value
        return out


class BasisState(NamedTuple):
    parity_L: int
    parity_R: int
    dN: int
    n_cp: int
    dot1: int
    dot2: int

    @property
    def island(self) -> tuple[int, int, int, int]:
        return self.parity_L, self.parity_R, self.dN, self.n_cp

    def charge_consistent(self) -> bool:
        # island charge = 2 * Cooper pairs + quasiparticle occupations
        return self.dN == 2 * self.n_cp + self.parity_L + self.parity_R


DOT_STATES = ((0, 0), (0, 1), (1, 0), (1, 1))

# (parity_R, dN, n_cp) of the island states per block, in canonical order
_ISLAND = {
    0: {"ground": (0, 0, 0), "plus": (1, 1, 0), "minus": (1, -1, -1),
        "plus2": (0, 2, 1), "minus2": (0, -2, -1)},
    1: {"ground": (1, 0, -1), "plus": (0, 1, 0), "minus": (0, -1, -1),
        "plus2": (1, 2, 0), "minus2": (1, -2, -2)},
}

CHARGE_MODES = ("ground", "three", "four", "five")


@dataclass(frozen=True)
class BasisSet:
    """Ordered product basis of island and dot states.

    ``block_mode`` is ``0``, ``1`` (a single parity block) or ``"both"``.
    ``charge_mode`` is ``"three"`` (charges N, N+1, N-1), ``"four"`` (adds
    N+2, or N-2 when ``extra_charge=-2``), ``"five"`` (both N+2 and N-2,
    symmetric under n_g -> -n_g) or ``"ground"`` (the island ground state
    only, used by the effective dot model).
    """

    states: tuple[BasisState, ...]
    block_mode: object
    charge_mode: str
    extra_charge: int = 2
    reference_charge: int = 0

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def blocks(self) -> np.ndarray:
        return np.array([s.parity_L for s in self.states])

    def block_indices(self, block: int) -> np.ndarray:
        return np.flatnonzero(self.blocks == block)

    @property
    def island_charge(self) -> np.ndarray:
        return np.array([s.dN for s in self.states])

    @property
    def dot_occupation(self) -> np.ndarray:
        return np.array([[s.dot1, s.dot2] for s in self.states])

    def total_charge(self) -> np.ndarray:
        """Diagonal operator counting island charge offset plus both dots."""
        n = self.island_charge + self.dot_occupation.sum(axis=1)
        return np.diag(n.astype(complex))

    def find(self, state: BasisState) -> int:
        return self.states.index(state)


def build_basis(block_mode=0, charge_mode: str = "three", extra_charge: int = 2,
                reference_charge: int = 0) -> BasisSet:
    if block_mode not in (0, 1, "both"):
        raise ValueError(f"block_mode must be 0, 1 or 'both', got {block_mode!r}")
    if charge_mode not in CHARGE_MODES:
        raise ValueError(f"charge_mode must be one of {CHARGE_MODES}, got {charge_mode!r}")
    if extra_charge not in (2, -2):
        raise ValueError("extra_charge must be +2 or -2")
    if reference_charge % 2:
        raise ValueError("reference charge must be even")
    names = {"ground": ["ground"], "three": ["ground", "plus", "minus"],
             "four": ["ground", "plus", "minus", "plus2" if extra_charge == 2 else "minus2"],
             "five": ["ground", "plus", "minus", "plus2", "minus2"]}
    blocks = (0, 1) if block_mode == "both" else (block_mode,)
    states = []
    for pL in blocks:
        for name in names[charge_mode]:
            pR, dN, ncp = _ISLAND[pL][name]
            for n1, n2 in DOT_STATES:
                states.append(BasisState(pL, pR, dN, ncp, n1, n2))
    return BasisSet(tuple(states), block_mode, charge_mode, extra_charge, reference_charge)


def basis_for_gate_charge(n_g: float, block_mode=0, charge_mode: str | None = None) -> BasisSet:
    """Basis centred on the even charge nearest to ``n_g``.

    With ``charge_mode="four"`` the fourth island state is placed on the side
    towards ``n_g`` (N+2 for n_g above the reference, N-2 below), so that the
    result only depends on the offset ``n_g - N_ref`` and is periodic in
    ``n_g`` with period 2.
    """
    ref = 2 * int(np.floor(n_g / 2.0 + 0.5))
    delta = n_g - ref
    if charge_mode is None:
        charge_mode = "three" if abs(delta) < 1e-12 else "four"
    extra = 2 if delta >= 0 else -2
    return build_basis(block_mode, charge_mode, extra, ref)


class ModeOperators(NamedTuple):
    d1: np.ndarray
    d2: np.ndarray
    A_up: np.ndarray
    B_up: np.ndarray


def _jw_sign(state: BasisState, mode: int) -> int:
    # mode order (d1, d2, f_R): sign is (-1)^(occupied modes before `mode`)
    occ = (state.dot1, state.dot2)[:mode]
    return -1 if sum(occ) % 2 else 1


def build_mode_operators(basis: BasisSet) -> ModeOperators:
    """Dot annihilators and island raising operators on a truncated basis.

    ``A_up`` is ``f_R^dagger`` and ``B_up`` is ``exp(-i theta) f_R^dagger``
    (removes a Cooper pair). Transitions leaving the basis map to zero.
    """
    D = basis.dim
    index = basis.index
    d1, d2, A, B = (np.zeros((D, D), dtype=complex) for _ in range(4))
    for i, s in enumerate(basis.states):
        if s.dot1:
            j = index.get(s._replace(dot1=0))
            if j is not None:
                d1[j, i] = _jw_sign(s, 0)
        if s.dot2:
            j = index.get(s._replace(dot2=0))
            if j is not None:
                d2[j, i] = _jw_sign(s, 1)
        if s.parity_R == 0:
            sign = _jw_sign(s, 2)
            j = index.get(s._replace(parity_R=1, dN=s.dN + 1))
            if j is not None:
                A[j, i] = sign
            j = index.get(s._replace(parity_R=1, dN=s.dN - 1, n_cp=s.n_cp - 1))
            if j is not None:
                B[j, i] = sign
    return ModeOperators(d1, d2, A, B)


def dag(M: np.ndarray) -> np.ndarray:
    return M.conj().T


def charging_energies(params: SystemParams, basis: BasisSet) -> np.ndarray:
    q = basis.island_charge + basis.reference_charge - params.n_g
    return params.E_C * q.astype(float) ** 2


def build_hamiltonian(params: SystemParams, basis: BasisSet,
                      ops: ModeOperators | None = None) -> np.ndarray:
    """Full system Hamiltonian: charging + dot levels + tunneling."""
    if ops is None:
        ops = build_mode_operators(basis)
    d1, d2, A, B = ops
    l0, l1, l2 = complex(params.lambda0), complex(params.lambda1), complex(params.lambda2)
    occ = basis.dot_occupation
    H = np.diag(charging_energies(params, basis) + params.eps1 * occ[:, 0]
                + params.eps2 * occ[:, 1]).astype(complex)
    hop = -l0 * np.exp(1j * params.phi) * dag(d2) @ d1
    H += hop + dag(hop)
    H += (l1 * d1 @ A + l1 * d1 @ dag(B)
          - np.conj(l1) * dag(d1) @ B - np.conj(l1) * dag(d1) @ dag(A))
    H += (l2 * A @ d2 - l2 * dag(B) @ d2
          + np.conj(l2) * B @ dag(d2) - np.conj(l2) * dag(A) @ dag(d2))
    defect = hermiticity_defect(H)
    if defect > 1e-12:
        raise ConstructionError(f"Hamiltonian is not Hermitian (defect {defect:.3e})")
    return H


def block_sign(block: int) -> int:
    """Qubit eigenvalue z entering the effective coupling (+1 for 0_L)."""
    return 1 if block == 0 else -1


def build_effective_hamiltonian(params: SystemParams, z: int, shift: bool = False) -> np.ndarray:
    """Low-energy double-dot Hamiltonian on ``|0,0>, |0,1>, |1,0>, |1,1>``.

    With ``shift=True`` the constant ``-2|lambda1 lambda2|/E_C`` is added so the
    levels line up with the full model.
    """
    if z not in (1, -1):
        raise ValueError("z must be +1 or -1")
    basis = build_basis(0 if z == 1 else 1, "ground")
    ops = build_mode_operators(basis)
    d1, d2 = ops.d1, ops.d2
    l0, l1, l2 = complex(params.lambda0), complex(params.lambda1), complex(params.lambda2)
    t = l0 * np.exp(1j * params.phi) - z * 2 * l1 * np.conj(l2) / params.E_C
    hop = -t * dag(d2) @ d1
    occ = basis.dot_occupation
    H = hop + dag(hop) + np.diag(params.eps1 * occ[:, 0] + params.eps2 * occ[:, 1])
    if shift:
        H = H - 2 * abs(l1 * l2) / params.E_C * np.eye(4)
    return H


@dataclass(frozen=True)
class SpectrumResult:
    phis: np.ndarray
    energies: np.ndarray  # shape (len(phis), dim), ascending per row

    def lowest(self, k: int = 4) -> np.ndarray:
        return self.energies[:, :k]


def spectrum_vs_flux(params: SystemParams, basis: BasisSet, phi_grid) -> SpectrumResult:
    phis = np.asarray(phi_grid, dtype=float)
    if phis.size == 0:
        raise ValueError("phi_grid must be non-empty")
    ops = build_mode_operators(basis)
    rows = [eig_hermitian(build_hamiltonian(params.replace(phi=float(p)), basis, ops)).values
            for p in phis]
    return SpectrumResult(phis, np.array(rows))
