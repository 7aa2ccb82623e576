"""Exhaustive duplet search: pick (N_lambda, BaR) that exhausts the power budget.

The search space is the fixed ladder of channel counts crossed with the
0.5-Gbaud grid from 10 to 30 Gbaud (328 duplets). Every duplet is evaluated;
the feasible one with minimum slack wins, with deterministic tie-breaking.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .params import GLOBALS, PnocProfile, SignalingParams
from .penalty import (ALLOWED_N_LAMBDA, CrosstalkModel, Goal, InfeasiblePenalty,
                      LinkGeometry, PenaltyBreakdown)
from .sensitivity import SensitivityCurve, bitrate

LAMBDA_SET = ALLOWED_N_LAMBDA
BAUD_SET = tuple(10.0 + 0.5 * k for k in range(41))
EPSILON_TOL = 1e-9


@dataclass(frozen=True)
class SearchSpace:
    lambda_set: tuple[int, ...] = LAMBDA_SET
    baud_set: tuple[float, ...] = BAUD_SET

    def duplets(self):
        for n in self.lambda_set:
            for baud in self.baud_set:
                yield n, baud

    def __len__(self):
        return len(self.lambda_set) * len(self.baud_set)


@dataclass(frozen=True)
class DesignPoint:
    """One evaluated (N_lambda, BaR) duplet."""

    n_lambda: int
    baud_gbaud: float
    bitrate_gbps: float
    aggregate_gbps: float
    sensitivity_dbm: float
    power_budget_db: float
    penalty: PenaltyBreakdown | None
    slack_epsilon_db: float
    laser_power_dbm: float
    feasible: bool
    sensitivity_extrapolated: bool = False
    infeasible_reason: str = ""

    def as_dict(self) -> dict:
        d = {
            "n_lambda": self.n_lambda,
            "baud_gbaud": self.baud_gbaud,
            "bitrate_gbps": self.bitrate_gbps,
            "aggregate_gbps": self.aggregate_gbps,
            "sensitivity_dbm": self.sensitivity_dbm,
            "power_budget_db": self.power_budget_db,
            "slack_epsilon_db": self.slack_epsilon_db,
            "laser_power_dbm": self.laser_power_dbm,
            "feasible": self.feasible,
            "sensitivity_extrapolated": self.sensitivity_extrapolated,
        }
        d["penalty"] = self.penalty.as_dict() if self.penalty else None
        if self.infeasible_reason:
            d["infeasible_reason"] = self.infeasible_reason
        return d

    def as_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


class InfeasibleDesign(RuntimeError):
    """No duplet in the search space satisfies the power-budget constraint."""

    def __init__(self, message: str, closest: DesignPoint | None = None):
        super().__init__(message)
        self.closest = closest


@dataclass
class LinkDesigner:
    """Binds the crosstalk model and sensitivity curve for duplet evaluation."""

    model: CrosstalkModel
    curve: SensitivityCurve = field(default_factory=SensitivityCurve)
    p_max_dbm: float = GLOBALS.p_max_dbm

    def evaluate_duplet(self, n_lambda: int, baud_gbaud: float,
                        params: SignalingParams, profile: PnocProfile,
                        goal: Goal) -> DesignPoint:
        geometry = LinkGeometry(n_lambda, baud_gbaud,
                                fsr_nm=profile.fsr_nm,
                                base_wavelength_nm=profile.base_wavelength_nm)
        s_dbm, extrapolated = self.curve.evaluate(baud_gbaud)
        budget = self.p_max_dbm - s_dbm
        br = bitrate(baud_gbaud, params.levels_m)
        try:
            breakdown = self.model.total_penalty(goal, params, profile, geometry)
        except InfeasiblePenalty as exc:
            return DesignPoint(
                n_lambda=n_lambda, baud_gbaud=baud_gbaud, bitrate_gbps=br,
                aggregate_gbps=n_lambda * br, sensitivity_dbm=s_dbm,
                power_budget_db=budget, penalty=None,
                slack_epsilon_db=-math.inf, laser_power_dbm=math.inf,
                feasible=False, sensitivity_extrapolated=extrapolated,
                infeasible_reason=str(exc))
        total = breakdown.total_db
        epsilon = budget - total - 10.0 * math.log10(n_lambda)
        laser = total + 10.0 * math.log10(n_lambda) + s_dbm
        return DesignPoint(
            n_lambda=n_lambda, baud_gbaud=baud_gbaud, bitrate_gbps=br,
            aggregate_gbps=n_lambda * br, sensitivity_dbm=s_dbm,
            power_budget_db=budget, penalty=breakdown,
            slack_epsilon_db=epsilon, laser_power_dbm=laser,
            feasible=epsilon >= 0.0, sensitivity_extrapolated=extrapolated)

    def frontier(self, params: SignalingParams, profile: PnocProfile,
                 goal: Goal, space: SearchSpace | None = None) -> list[DesignPoint]:
        """Evaluate every duplet (feasible or not) in deterministic order."""
        space = space or SearchSpace()
        return [self.evaluate_duplet(n, baud, params, profile, goal)
                for n, baud in space.duplets()]

    def search_optimal(self, params: SignalingParams, profile: PnocProfile,
                       goal: Goal, space: SearchSpace | None = None,
                       return_frontier: bool = False):
        """Full enumeration; returns the feasible duplet with minimum slack.

        Ties within 1e-9 dB break toward higher aggregate datarate, then
        higher channel count, then lower baud.
        """
        space = space or SearchSpace()
        frontier: list[DesignPoint] = []
        best: DesignPoint | None = None
        for n, baud in space.duplets():
            point = self.evaluate_duplet(n, baud, params, profile, goal)
            frontier.append(point)
            if not point.feasible:
                continue
            if best is None or _better(point, best):
                best = point
        if best is None:
            closest = max(
                (p for p in frontier if p.slack_epsilon_db > -math.inf),
                key=lambda p: p.slack_epsilon_db, default=None)
            deficit = -closest.slack_epsilon_db if closest else math.inf
            raise InfeasibleDesign(
                f"no feasible duplet for {params.scheme.value}/{profile.name.value}/"
                f"{goal.value} at ER {params.extinction_ratio_db:g} dB; closest "
                f"misses the budget by {deficit:.2f} dB", closest)
        if return_frontier:
            return best, frontier
        return best


def _better(a: DesignPoint, b: DesignPoint) -> bool:
    if a.slack_epsilon_db < b.slack_epsilon_db - EPSILON_TOL:
        return True
    if a.slack_epsilon_db > b.slack_epsilon_db + EPSILON_TOL:
        return False
    if a.aggregate_gbps != b.aggregate_gbps:
        return a.aggregate_gbps > b.aggregate_gbps
    if a.n_lambda != b.n_lambda:
        return a.n_lambda > b.n_lambda
    return a.baud_gbaud < b.baud_gbaud
