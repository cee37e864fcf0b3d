import numpy as np
import pandas as pd

RATE_COLUMN = "rate_bps_hz"


def outage(rates, target_rate):
    """
    Fraction of trials whose rate falls strictly below target_rate.
    """
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        return 0.0
    return float(np.mean(rates < target_rate))


def rate_cdf(rates, grid=None):
    """
    Empirical CDF P(rate <= x), right-continuous and ending at 1.

    With no grid the CDF is evaluated at every distinct observed rate.
    """
    rates = np.sort(np.asarray(rates, dtype=float))
    if grid is None:
        grid = np.unique(rates)
    grid = np.asarray(grid, dtype=float)
    if rates.size == 0:
        return pd.DataFrame({RATE_COLUMN: grid, "cdf": np.zeros_like(grid)})
    cdf = np.searchsorted(rates, grid, side="right") / rates.size
    return pd.DataFrame({RATE_COLUMN: grid, "cdf": cdf})


def rate_spread(rates):
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        return 0.0
    return float(rates.max() - rates.min())


def summarize_rates(rates, target_rate, tolerance=0.1):
    """
    Summary statistics of a Monte Carlo rate sample:
    min/max/mean/median, spread and outage at r and at r - tolerance.
    """
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        return {"trials": 0, "min_rate": 0.0, "max_rate": 0.0, "mean_rate": 0.0, "median_rate": 0.0,
                "spread": 0.0, "outage": 0.0, "outage_relaxed": 0.0}
    return {
        "trials": int(rates.size),
        "min_rate": float(rates.min()),
        "max_rate": float(rates.max()),
        "mean_rate": float(rates.mean()),
        "median_rate": float(np.median(rates)),
        "spread": rate_spread(rates),
        "outage": outage(rates, target_rate),
        "outage_relaxed": outage(rates, target_rate - tolerance),
    }


def _violations_along(table, axis, group_by, decreasing):
    """Adjacent pairs along `axis` that break the expected trend, within each group."""
    found = []
    for _, group in table.groupby(list(group_by)):
        group = group.sort_values(axis)
        powers = group["power_w"].to_numpy()
        for i in range(1, len(powers)):
            if decreasing and powers[i] >= powers[i - 1]:
                found.append((axis, group.iloc[i - 1].to_dict(), group.iloc[i].to_dict()))
            if not decreasing and powers[i] < powers[i - 1]:
                found.append((axis, group.iloc[i - 1].to_dict(), group.iloc[i].to_dict()))
    return found


def monotonicity_violations(sweep_table):
    """
    List trend violations in a power sweep: power should be nondecreasing in
    the target rate and in the uncertainty radius, and decreasing in the
    number of IRS elements. Failed grid points are ignored.
    """
    if sweep_table.empty:
        return []
    table = sweep_table.dropna(subset=["power_w"])
    found = []
    found += _violations_along(table, "target_rate_bps_hz", ("upsilon_m", "irs_elements"), decreasing=False)
    found += _violations_along(table, "upsilon_m", ("target_rate_bps_hz", "irs_elements"), decreasing=False)
    found += _violations_along(table, "irs_elements", ("target_rate_bps_hz", "upsilon_m"), decreasing=True)
    return found


def count_monotonicity_violations(sweep_table):
    return len(monotonicity_violations(sweep_table))


def trace_increases(trace_df, rel_tol=1e-6):
    """
    Count iterations whose power exceeds the previous one by more than rel_tol.
    """
    if trace_df.empty:
        return 0
    power = trace_df.sort_values("iteration")["power_w"].to_numpy()
    return int(np.sum(power[1:] > power[:-1] * (1.0 + rel_tol)))


def compare_reports(robust_df, nonrobust_df, target_rate, tolerance=0.1):
    """
    Side-by-side summary of two rate samples (robust vs non-robust).
    """
    rows = []
    for scheme, df in (("robust", robust_df), ("nonrobust", nonrobust_df)):
        stats = summarize_rates(df[RATE_COLUMN], target_rate, tolerance)
        stats["scheme"] = scheme
        rows.append(stats)
    return pd.DataFrame(rows).set_index("scheme")
