"""Dirichlet problem for the graphical translating flow."""

from .domain import BoundaryData, DomainSpec, Disc, Ellipse, Rectangle, disc, ellipse, interval, rectangle
from .grid import Grid, discretize_domain
from .monitors import (
    BarrierReport,
    BalanceReport,
    GradientReport,
    MaxPrincipleReport,
    barrier_check,
    boundary_gradient_bound,
    boundary_gradient_monitor,
    boundary_gradients,
    check_small_data_condition,
    max_principle_monitor,
    small_data_value,
    volume_balance,
)
from .solver import (
    Diagnostics,
    FlowConfig,
    FlowState,
    Record,
    cfl_timestep,
    initial_state,
    run,
    spatial_operator,
    step,
)

__all__ = [name for name in dir() if not name.startswith("_")]
