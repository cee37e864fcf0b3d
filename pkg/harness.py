"""
Monte Carlo evaluation, power sweeps and result files.

Trials are split into fixed-size chunks, each with its own child seed, so
results do not depend on how many workers run them; chunk results are merged
in chunk order.
"""

import dataclasses
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from analysis import RATE_COLUMN, rate_cdf, summarize_rates
from array_geometry import UraGeometry
from baseline import BaselineSolution, nonrobust_design
from channel_model import PhaseShifts, dbm
from data_generator import ChannelSet
from exceptions import IrsDesignError
from location_model import (
    ErrorSensitivity,
    error_sensitivity,
    exact_reflect_vectors,
    model_reflect_vectors,
    sample_errors,
)
from robust_optimizer import DesignContext, DesignSolution, IterationRecord, alternate
from scenario import Scenario, build_context, resolve_seed, scenario_from_dict, seed_streams
from summary_report import summary_text

logger = logging.getLogger(__name__)

TRIAL_CHUNK = 1000
FLOAT_FORMAT = "%.12g"
DESIGN_FORMAT = "irs-design/1"

Design = Union[DesignSolution, BaselineSolution]


@dataclass
class EvalReport:
    scheme: str
    mode: str
    power_w: float
    target_rate: float
    records: pd.DataFrame
    summary: Dict[str, float]

    @property
    def rates(self) -> np.ndarray:
        return self.records[RATE_COLUMN].to_numpy()

    @property
    def outage(self) -> float:
        return self.summary["outage"]

    @property
    def min_rate(self) -> float:
        return self.summary["min_rate"]

    def cdf(self, grid=None) -> pd.DataFrame:
        return rate_cdf(self.rates, grid)


def design_scenario(scen: Scenario) -> Tuple[DesignSolution, DesignContext, ChannelSet]:
    """Synthesize the scenario's channels and run the alternating optimizer on them."""
    ctx, channels = build_context(scen)
    cfg = scen.optimizer_config(seed_streams(scen)["optimizer"])
    return alternate(ctx, cfg), ctx, channels


def _rates(g: np.ndarray, xi: PhaseShifts, Gw: np.ndarray, noise_power: float) -> np.ndarray:
    power = np.abs(g @ (xi.xi * Gw)) ** 2
    return np.log2(1.0 + power / noise_power)


def _evaluate_chunk(design: Design, scen: Scenario, channels: ChannelSet, sens: ErrorSensitivity,
                    count: int, seed: np.random.SeedSequence) -> pd.DataFrame:
    deltas = sample_errors(scen.ball, count, seed)
    Gw = channels.G.matrix @ design.w
    g_exact = exact_reflect_vectors(scen.irs_pos, scen.estimated_user, deltas, channels.alpha_hat, scen.irs_geom)
    g_model = model_reflect_vectors(channels.g_hat, sens, deltas)
    return pd.DataFrame({
        "dx_m": deltas[:, 0],
        "dy_m": deltas[:, 1],
        "dz_m": deltas[:, 2],
        "error_norm_m": np.linalg.norm(deltas, axis=1),
        "exact_rate_bps_hz": _rates(g_exact, design.xi, Gw, scen.noise_power),
        "model_rate_bps_hz": _rates(g_model, design.xi, Gw, scen.noise_power),
    })


def evaluate(design: Design, scen: Scenario, trials: Optional[int] = None, mode: Optional[str] = None,
             channels: Optional[ChannelSet] = None, rng_seed=None, workers: Optional[int] = None) -> EvalReport:
    """
    Rate of a fixed design under uniformly drawn location errors.

    Both the exact and the model channel are computed for every trial; mode
    picks which one feeds the outage and CDF statistics.
    """
    trials = scen.trials if trials is None else trials
    mode = mode or scen.eval_mode
    workers = scen.workers if workers is None else workers
    if trials < 1:
        raise IrsDesignError(f"trials must be >= 1, got {trials}")
    if workers < 1:
        raise IrsDesignError(f"workers must be >= 1, got {workers}")
    if channels is None:
        _, channels = build_context(scen)
    sens = error_sensitivity(scen.irs_pos, scen.estimated_user, scen.irs_geom)
    if rng_seed is None:
        root = seed_streams(scen)["evaluation"]
    elif isinstance(rng_seed, np.random.SeedSequence):
        root = rng_seed
    else:
        root = np.random.SeedSequence(rng_seed)

    sizes = [min(TRIAL_CHUNK, trials - start) for start in range(0, trials, TRIAL_CHUNK)]
    seeds = root.spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        chunks = list(executor.map(lambda job: _evaluate_chunk(design, scen, channels, sens, *job),
                                   zip(sizes, seeds)))
    records = pd.concat(chunks, ignore_index=True)
    records.insert(0, "trial", np.arange(trials))
    records[RATE_COLUMN] = records[f"{mode}_rate_bps_hz"]

    scheme = "robust" if isinstance(design, DesignSolution) else "nonrobust"
    summary = summarize_rates(records[RATE_COLUMN], scen.target_rate)
    logger.info(f"{scheme} ({mode}): min rate {summary['min_rate']:.3f} bits/s/Hz, "
                f"outage {100 * summary['outage']:.2f}% over {trials} trials")
    return EvalReport(scheme=scheme, mode=mode, power_w=design.power, target_rate=scen.target_rate,
                      records=records, summary=summary)


def compare_schemes(design: DesignSolution, scen: Scenario, trials: Optional[int] = None,
                    mode: Optional[str] = None, workers: Optional[int] = None,
                    rng_seed=None) -> Tuple[EvalReport, EvalReport]:
    """Robust design against the non-robust benchmark at the same power, on the same error draws."""
    ctx, channels = build_context(scen)
    baseline = nonrobust_design(ctx, design.power)
    robust = evaluate(design, scen, trials, mode, channels, rng_seed, workers)
    nonrobust = evaluate(baseline, scen, trials, mode, channels, rng_seed, workers)
    return robust, nonrobust


def _sweep_point(scen: Scenario) -> Dict[str, object]:
    row = {"target_rate_bps_hz": scen.target_rate, "upsilon_m": scen.upsilon_m,
           "irs_elements": scen.irs_geom.size}
    try:
        design, _, _ = design_scenario(scen)
    except IrsDesignError as exc:
        logger.warning(f"sweep point r={scen.target_rate}, upsilon={scen.upsilon_m}, "
                       f"M={scen.irs_geom.size} failed: {exc}")
        row.update({"power_w": np.nan, "power_dbm": np.nan, "iterations": np.nan, "margin_w": np.nan,
                    "exact_worst_case_rate": np.nan, "status": "failed", "reason": str(exc)})
        return row
    row.update({
        "power_w": design.power,
        "power_dbm": dbm(design.power),
        "iterations": design.iterations,
        "margin_w": design.trace[-1].margin,
        "exact_worst_case_rate": design.exact_worst_case_rate,
        "status": "ok" if design.success else "uncertified",
        "reason": "",
    })
    logger.info(f"sweep point r={scen.target_rate}, upsilon={scen.upsilon_m}, M={scen.irs_geom.size}: "
                f"{row['power_dbm']:.2f} dBm")
    return row


def sweep_power_vs_rate(scen: Scenario, rates: Sequence[float], upsilons: Sequence[float],
                        m_values: Sequence[int], workers: Optional[int] = None) -> pd.DataFrame:
    """
    Required power over the (M, upsilon, r) grid; every point shares the scenario seed.

    Failed points are kept as rows with status 'failed' and the reason.
    """
    if not (rates and upsilons and m_values):
        raise IrsDesignError("sweep needs at least one rate, one radius and one element count")
    scen = resolve_seed(scen)
    grid = [
        dataclasses.replace(scen, irs_geom=UraGeometry.square(m, scen.irs_geom.spacing),
                            upsilon_m=float(u), target_rate=float(r))
        for m, u, r in itertools.product(m_values, upsilons, rates)
    ]
    with ThreadPoolExecutor(max_workers=scen.workers if workers is None else workers) as executor:
        rows = list(executor.map(_sweep_point, grid))
    return pd.DataFrame(rows)


def trace_frame(trace: List[IterationRecord]) -> pd.DataFrame:
    columns = [field.name for field in dataclasses.fields(IterationRecord)]
    df = pd.DataFrame([dataclasses.asdict(record) for record in trace], columns=columns)
    df.insert(2, "power_dbm", [record.power_dbm for record in trace])
    return df


def write_csv(df: pd.DataFrame, path: str) -> None:
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"wrote {path}")


def write_report(report: EvalReport, path: str) -> str:
    """Per-trial CSV at path and the summary block next to it; returns the summary path."""
    write_csv(report.records, path)
    summary_path = f"{path}.summary.txt"
    with open(summary_path, "w") as f:
        f.write(summary_text(report))
    return summary_path


def _complex_list(values: np.ndarray) -> List[List[float]]:
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex)]


def design_to_file(design: DesignSolution, scen: Scenario, path: str) -> None:
    """JSON design record: scenario, w, xi phases, power, rates and the iteration trace."""
    doc = {
        "format": DESIGN_FORMAT,
        "scenario": scen.to_dict(),
        "w": _complex_list(design.w),
        "xi_phase_rad": [float(p) for p in np.angle(design.xi.xi)],
        "power_w": design.power,
        "power_dbm": dbm(design.power),
        "mu": design.mu,
        "worst_case_rate": design.worst_case_rate,
        "exact_worst_case_rate": design.exact_worst_case_rate,
        "target_rate": design.target_rate,
        "success": design.success,
        "converged": design.converged,
        "iterations": design.iterations,
        "sdr_bound_w": design.sdr_bound,
        "trace": [dataclasses.asdict(record) for record in design.trace],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
    logger.info(f"wrote design {path}")


def design_from_file(path: str) -> Tuple[DesignSolution, Scenario]:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != DESIGN_FORMAT:
        raise IrsDesignError(f"{path}: not a design record (format {doc.get('format')!r})")
    scen = scenario_from_dict(doc["scenario"], allow_paper=True)
    w = np.array([re + 1j * im for re, im in doc["w"]])
    design = DesignSolution(
        w=w,
        xi=PhaseShifts.from_phases(doc["xi_phase_rad"]),
        power=float(np.real(np.vdot(w, w))),
        mu=doc["mu"],
        worst_case_rate=doc["worst_case_rate"],
        iterations=doc["iterations"],
        trace=[IterationRecord(**record) for record in doc["trace"]],
        exact_worst_case_rate=doc["exact_worst_case_rate"],
        success=doc["success"],
        target_rate=doc["target_rate"],
        sdr_bound=doc["sdr_bound_w"],
        converged=doc["converged"],
    )
    return design, scen
