"""Rates and relay power allocation for the half-duplex relay channel."""

from .allocation import (
    AllocationPolicy,
    ChannelRealization,
    EnvelopeCache,
    Estimate,
    PowerBudget,
    Protocol,
    RateReport,
    SolverError,
    allocate_state,
    average_rate,
    expected_relay_power,
    fixed_power_baseline,
    solve_mu,
)
from .envelope import (
    EnvelopeGeometry,
    GeometryMismatchError,
    NoBridgeError,
    build_envelope,
    envelope_derivative,
    envelope_rate,
    t_envelope,
)
from .estimator import RelayPowerAllocator
from .fading import (
    Empirical,
    FadingModel,
    Fixed,
    IntegratorBudgetError,
    IntegratorSpec,
    Rayleigh,
    StateSet,
    states_from_fading,
    states_from_list,
)
from .inverse import UnboundedError, f1_jump, t_cf, t_df
from .rates import (
    DomainError,
    Regime,
    SnrState,
    crossover_f,
    d_rate_cf,
    d_rate_df,
    eta,
    f1,
    f2,
    rate_cf,
    rate_df,
    rate_hybrid,
    regime,
    rho_star,
    shannon,
)

__version__ = "0.1.0"
