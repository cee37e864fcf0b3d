"""Non-robust benchmark: trusts the estimated channel and maximizes the nominal rate at a fixed power."""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from channel_model import PhaseShifts, achievable_rate
from exceptions import DomainError
from robust_optimizer import DesignContext

logger = logging.getLogger(__name__)


@dataclass
class BaselineSolution:
    w: np.ndarray
    xi: PhaseShifts
    power: float
    nominal_rate: float
    iterations: int = 0
    rate_history: List[float] = field(default_factory=list)


def _matched_filter(h: np.ndarray, power_budget: float) -> np.ndarray:
    norm = np.linalg.norm(h)
    if norm == 0.0:
        raise DomainError("zero composite channel")
    return np.sqrt(power_budget) * np.conj(h) / norm


def _align(ctx: DesignContext, w: np.ndarray) -> PhaseShifts:
    return PhaseShifts.project(np.conj(ctx.g_hat.vector * (ctx.G.matrix @ w)))


def nonrobust_design(ctx: DesignContext, power_budget: float, max_iters: int = 100,
                     tol: float = 1e-9) -> BaselineSolution:
    """
    Alternate phase alignment of diag(g_hat) G w and MRT at ||w||^2 = power_budget.

    Both half-steps are exact conditional maximizers, so the nominal rate never
    decreases. Stops once a round improves it by less than tol relative; the
    phases are then aligned to the final beamformer and nominal_rate is the
    rate of the returned pair.
    """
    if not power_budget > 0:
        raise DomainError(f"power budget must be positive, got {power_budget}")
    xi = PhaseShifts.ones(ctx.irs_size)
    w = _matched_filter(ctx.nominal_channel(xi), power_budget)
    rate = achievable_rate(ctx.nominal_channel(xi), w, ctx.noise_power)
    history = [rate]

    iterations = 0
    for iterations in range(1, max_iters + 1):
        xi = _align(ctx, w)
        h = ctx.nominal_channel(xi)
        w = _matched_filter(h, power_budget)
        new_rate = achievable_rate(h, w, ctx.noise_power)
        history.append(new_rate)
        converged = new_rate - rate <= tol * abs(new_rate)
        rate = new_rate
        if converged:
            break

    xi = _align(ctx, w)
    rate = achievable_rate(ctx.nominal_channel(xi), w, ctx.noise_power)
    history.append(rate)
    logger.debug(f"non-robust design: nominal rate {rate:.4f} bits/s/Hz after {iterations} iterations")
    return BaselineSolution(w=w, xi=xi, power=power_budget, nominal_rate=rate, iterations=iterations,
                            rate_history=history)
