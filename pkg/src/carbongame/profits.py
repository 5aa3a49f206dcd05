"""Instantaneous payoff rates, discounted profits along trajectories, and
consistency checks against the analytic value functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import (
    GameMode,
    GameSolution,
    ModelParams,
    Trajectory,
    demand,
    derive_constants,
    effort_costs,
    supply,
)

__all__ = [
    "PayoffBreakdown",
    "payoff_rates",
    "discounted_profit",
    "value_at",
    "total_value_at",
    "HorizonError",
]

ROLES = ("farmer", "retailer", "joint")


class HorizonError(ValueError):
    """Trajectory horizon too short for reliable discounted quadrature."""


@dataclass(frozen=True)
class PayoffBreakdown:
    """Per-role payoff components at a state (scalars or aligned arrays).

    subsidy is the cost-share transfer x_f * (lambda_f/2) * E_f^2, received
    by the farmer and paid by the retailer; it is zero outside the
    Stackelberg mode so the component identities hold uniformly:

        net_f = margin_f + sink_f - cost_f + subsidy
        net_r = margin_r - cost_r - subsidy

    x_f_in_range is False where the supplied share leaves [0, 1]; the
    transfer accounting still balances there and computation proceeds.
    """

    mode: GameMode
    margin_f: np.ndarray
    sink_f: np.ndarray
    cost_f: np.ndarray
    margin_r: np.ndarray
    cost_r: np.ndarray
    subsidy: np.ndarray
    net_f: np.ndarray
    net_r: np.ndarray
    x_f_in_range: np.ndarray

    @property
    def total(self):
        return self.net_f + self.net_r


def payoff_rates(mode, H, E_f, E_r, x_f, params: ModelParams) -> PayoffBreakdown:
    """Component-wise payoff rates at (H, E_f, E_r) under the given mode.

    x_f must be supplied exactly when mode is Stackelberg. A zero effort cost
    makes the share irrelevant, so an undefined (nan) share of a zero cost
    transfers zero.
    """
    if not isinstance(mode, GameMode):
        mode = GameMode.from_string(str(mode))
    if mode is GameMode.STACKELBERG:
        if x_f is None:
            raise ValueError("x_f is required in the Stackelberg mode")
    elif x_f is not None:
        raise ValueError(f"x_f must be None outside the Stackelberg mode, "
                         f"got {x_f!r} for mode {mode.value}")
    c = derive_constants(params)
    H = np.asarray(H, dtype=float)
    E_f = np.asarray(E_f, dtype=float)
    E_r = np.asarray(E_r, dtype=float)
    Q, D = supply(H, c), demand(H, c)
    margin_f = params.p_f * Q
    sink_f = params.p_c * (1.0 + params.omega * E_f) * Q
    cost_f, cost_r = effort_costs(E_f, E_r, params)
    margin_r = params.p_r * D
    if mode is GameMode.STACKELBERG:
        x = np.asarray(x_f, dtype=float)
        subsidy = np.where(cost_f == 0.0, 0.0, x * cost_f)
        in_range = (x >= 0.0) & (x <= 1.0) | (cost_f == 0.0)
    else:
        subsidy = np.zeros_like(cost_f)
        in_range = np.ones_like(cost_f, dtype=bool)
    net_f = margin_f + sink_f - cost_f + subsidy
    net_r = margin_r - cost_r - subsidy
    return PayoffBreakdown(mode=mode, margin_f=margin_f, sink_f=sink_f,
                           cost_f=cost_f, margin_r=margin_r, cost_r=cost_r,
                           subsidy=subsidy, net_f=net_f, net_r=net_r,
                           x_f_in_range=in_range)


def _role_series(trajectory: Trajectory, role: str) -> np.ndarray:
    if role == "farmer":
        return trajectory.payoff_f
    if role == "retailer":
        return trajectory.payoff_r
    if role == "joint":
        return trajectory.payoff_f + trajectory.payoff_r
    raise ValueError(f"unknown role {role!r}; expected one of {ROLES}")


def discounted_profit(trajectory: Trajectory, role: str,
                      params: ModelParams) -> float:
    """Discounted total profit of a role along the trajectory.

    Composite trapezoid of exp(-rho*t) * rate on the stored grid, plus the
    analytic tail exp(-rho*T) * rate(T) / rho that assumes the state stays at
    H(T) afterwards. The horizon must satisfy rho*T >= 20 so the frozen-state
    tail is negligible at the checked tolerances.
    """
    T = float(trajectory.t[-1])
    if params.rho * T < 20.0:
        raise HorizonError(
            f"horizon too short: rho*T = {params.rho * T:.3g} < 20; "
            "extend the horizon so the discount tail is negligible")
    rate = _role_series(trajectory, role)
    weight = np.exp(-params.rho * trajectory.t)
    body = float(np.trapezoid(weight * rate, trajectory.t))
    tail = float(weight[-1] * rate[-1] / params.rho)
    return body + tail


def value_at(solution: GameSolution, role: str, H) -> float:
    """Evaluate the role's analytic value function at H.

    Only roles stored on the solution are valid: farmer/retailer in the
    decentralized and Stackelberg modes, joint in the centralized mode.
    """
    if role not in solution.values:
        raise ValueError(
            f"role {role!r} has no value function in mode "
            f"{solution.mode.value}; available: {sorted(solution.values)}")
    return solution.values[role].value(H)


def total_value_at(solution: GameSolution, H):
    """Chain-wide value at H: the joint value in the centralized mode, the
    sum of both roles' values otherwise."""
    if solution.mode is GameMode.CENTRALIZED:
        return solution.values["joint"].value(H)
    return (solution.values["farmer"].value(H)
            + solution.values["retailer"].value(H))
