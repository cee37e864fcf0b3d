from typing import Any, Dict, List

from analysis import count_monotonicity_violations, summarize_rates
from channel_model import dbm


class SummaryReport:
    """
    Collects designs and Monte Carlo results and renders the plain-text
    summary block written next to every CSV.
    """

    def __init__(self, title: str = "Robust IRS Beamforming Report"):
        self.title = title
        self.designs: List[Dict[str, Any]] = []
        self.evaluations: List[Dict[str, Any]] = []
        self.sweeps: List[Any] = []

    def add_design(self, design, label: str = "robust") -> None:
        """
        Store a design outcome.

        :param design: DesignSolution (or anything with power, worst-case rates and iterations)
        :param label: Name shown in the report
        """
        self.designs.append({
            "label": label,
            "power_w": design.power,
            "iterations": design.iterations,
            "worst_case_rate": design.worst_case_rate,
            "exact_worst_case_rate": design.exact_worst_case_rate,
            "target_rate": design.target_rate,
            "success": design.success,
            "sdr_bound_w": design.sdr_bound,
        })

    def add_evaluation(self, report) -> None:
        """
        Store a Monte Carlo evaluation.

        :param report: EvalReport
        """
        self.evaluations.append({
            "scheme": report.scheme,
            "mode": report.mode,
            "power_w": report.power_w,
            "target_rate": report.target_rate,
            "rates": report.rates,
        })

    def add_sweep(self, table) -> None:
        """
        Store a power sweep table.

        :param table: DataFrame from sweep_power_vs_rate
        """
        self.sweeps.append(table)

    def compute_statistics(self) -> List[Dict[str, Any]]:
        """
        Rate statistics per stored evaluation.

        :return: One dictionary per evaluation (min, spread, outage at r and r - 0.1, ...)
        """
        stats = []
        for item in self.evaluations:
            summary = summarize_rates(item["rates"], item["target_rate"])
            summary.update({k: item[k] for k in ("scheme", "mode", "power_w", "target_rate")})
            stats.append(summary)
        return stats

    def generate_report(self) -> str:
        lines = [f"=== {self.title} ==="]
        for d in self.designs:
            lines.append(f"--- Design: {d['label']} ---")
            lines.append(f"  Transmit power: {d['power_w']:.6e} W ({dbm(d['power_w']):.3f} dBm)")
            lines.append(f"  SDR lower bound: {d['sdr_bound_w']:.6e} W")
            lines.append(f"  Iterations: {d['iterations']}")
            lines.append(f"  Target rate: {d['target_rate']:.4f} bits/s/Hz")
            lines.append(f"  Worst-case rate (Taylor model): {d['worst_case_rate']:.4f} bits/s/Hz")
            lines.append(f"  Worst-case rate (exact model): {d['exact_worst_case_rate']:.4f} bits/s/Hz")
            lines.append(f"  Success: {'yes' if d['success'] else 'no'}")
            lines.append("")

        for s in self.compute_statistics():
            lines.append(f"--- Evaluation: {s['scheme']} ({s['mode']} channel, {s['trials']} trials) ---")
            lines.append(f"  Transmit power: {s['power_w']:.6e} W ({dbm(s['power_w']):.3f} dBm)")
            lines.append(f"  Min rate: {s['min_rate']:.4f} bits/s/Hz")
            lines.append(f"  Mean rate: {s['mean_rate']:.4f} bits/s/Hz")
            lines.append(f"  Rate spread: {s['spread']:.4f} bits/s/Hz")
            lines.append(f"  Outage at r = {s['target_rate']:.2f}: {100.0 * s['outage']:.2f}%")
            lines.append(f"  Outage at r - 0.1: {100.0 * s['outage_relaxed']:.2f}%")
            lines.append("")

        for table in self.sweeps:
            failed = int((table["status"] == "failed").sum())
            lines.append(f"--- Power sweep: {len(table)} grid points ---")
            lines.append(f"  Failed points: {failed}")
            lines.append(f"  Uncertified points: {int((table['status'] == 'uncertified').sum())}")
            lines.append(f"  Trend violations: {count_monotonicity_violations(table)}")
            solved = table.dropna(subset=["power_w"])
            if not solved.empty:
                lines.append(f"  Power range: {solved['power_dbm'].min():.3f} to {solved['power_dbm'].max():.3f} dBm")
            lines.append("")

        return "\n".join(lines).rstrip() + "\n"


def summary_text(report) -> str:
    """Summary block for a single EvalReport."""
    summary = SummaryReport()
    summary.add_evaluation(report)
    return summary.generate_report()
