"""Transport through a Majorana box qubit coupled to two quantum dots.

The package builds the island plus dot Hamiltonian in a truncated charge
basis, attaches wide-band leads through a Lindblad generator written in the
Hamiltonian eigenbasis and evaluates stationary currents, transients, current
noise and Liouvillian spectra. Estimators follow the scikit-learn conventions.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    BasisSet,
    SystemParams,
    basis_for_gate_charge,
    build_basis,
    build_effective_hamiltonian,
    build_hamiltonian,
    build_mode_operators,
    spectrum_vs_flux,
)
from .lindblad import (  # noqa: E402
    AmbiguousSteadyStateError,
    Liouvillian,
    PositivityWarning,
    assemble_liouvillian,
    build_dissipators,
    liouvillian_spectrum,
    propagate,
    steady_state,
)
from .numerics import ContractError, NumericalError, SingularMatrixError  # noqa: E402
from .observables import FitError, TimeTrace, fit_decay_rates, fit_modes  # noqa: E402
from .simulator import CurrentScan, MajoranaTransport  # noqa: E402

__all__ = [
    "AmbiguousSteadyStateError", "BasisSet", "ContractError", "CurrentScan", "FitError",
    "Liouvillian", "MajoranaTransport", "NumericalError", "PositivityWarning",
    "SingularMatrixError", "SystemParams", "TimeTrace", "assemble_liouvillian",
    "basis_for_gate_charge", "build_basis", "build_dissipators", "build_effective_hamiltonian",
    "build_hamiltonian", "build_mode_operators", "fit_decay_rates", "fit_modes",
    "liouvillian_spectrum", "propagate", "spectrum_vs_flux", "steady_state", "__version__",
]
