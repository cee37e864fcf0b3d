import plotly.express as px
import plotly.graph_objects as go
import numpy as np
import pandas as pd

from analysis import RATE_COLUMN, rate_cdf

SCHEME_COLORS = {"robust": "royalblue", "nonrobust": "orange"}


def _empty_figure(title):
    fig = go.Figure()
    fig.update_layout(title=title)
    return fig


def _style(fig):
    fig.update_layout(
        plot_bgcolor='rgba(240, 240, 240, 0.8)',
        xaxis=dict(showgrid=True, gridcolor='rgba(200, 200, 200, 0.2)'),
        yaxis=dict(showgrid=True, gridcolor='rgba(200, 200, 200, 0.2)')
    )
    return fig


def rate_histogram(df, target_rate, title, color="royalblue"):
    """
    Histogram of per-trial rates with the target rate and the minimum marked.
    """
    if RATE_COLUMN not in df.columns or df[RATE_COLUMN].empty:
        return _empty_figure(f"No data available for {RATE_COLUMN}")

    rates = df[RATE_COLUMN]
    # Freedman-Diaconis bin width, clamped to 10-40 bins
    q75, q25 = np.percentile(rates, [75, 25])
    iqr = q75 - q25
    spread = rates.max() - rates.min()
    bin_width = 2 * iqr / (len(rates) ** (1/3)) if iqr > 0 else max(spread, 1e-3) / 10
    bin_count = max(10, min(40, int(np.ceil(spread / bin_width)) if bin_width > 0 else 10))

    fig = px.histogram(
        df,
        x=RATE_COLUMN,
        nbins=bin_count,
        title=title,
        labels={RATE_COLUMN: "Rate (bits/s/Hz)"},
        color_discrete_sequence=[color]
    )
    fig.update_traces(marker=dict(line=dict(color='rgba(0, 0, 0, 0.5)', width=1)), opacity=0.8)

    fig.add_vline(
        x=target_rate,
        line_width=2,
        line_dash="dash",
        line_color="red",
        annotation_text=f"Target: {target_rate:.2f}",
        annotation_position="top right",
        annotation_font=dict(size=12)
    )
    fig.add_vline(
        x=rates.min(),
        line_width=2,
        line_dash="dot",
        line_color="green",
        annotation_text=f"Min: {rates.min():.3f}",
        annotation_position="top left",
        annotation_font=dict(size=12)
    )
    fig.update_layout(bargap=0.1)
    return _style(fig)


def rate_cdf_chart(reports, target_rate):
    """
    Empirical CDF of the rate for each scheme.

    :param reports: Mapping of scheme name to per-trial DataFrame
    """
    frames = []
    for scheme, df in reports.items():
        if df is None or RATE_COLUMN not in df.columns or df.empty:
            continue
        cdf = rate_cdf(df[RATE_COLUMN])
        cdf["scheme"] = scheme
        frames.append(cdf)
    if not frames:
        return _empty_figure("No rate data available")

    fig = px.line(
        pd.concat(frames, ignore_index=True),
        x=RATE_COLUMN,
        y="cdf",
        color="scheme",
        line_shape="hv",
        title="CDF of the Achievable Rate",
        labels={RATE_COLUMN: "Rate (bits/s/Hz)", "cdf": "P(rate <= x)"},
        color_discrete_map=SCHEME_COLORS
    )
    fig.add_vline(x=target_rate, line_width=2, line_dash="dash", line_color="red",
                  annotation_text=f"Target: {target_rate:.2f}", annotation_position="bottom right")
    return _style(fig)


def power_vs_rate_chart(df_sweep):
    """Required transmit power against the target rate, one line per (M, upsilon)."""
    if df_sweep.empty or "power_dbm" not in df_sweep.columns:
        return _empty_figure("No sweep data available")

    df = df_sweep.dropna(subset=["power_dbm"]).copy()
    if df.empty:
        return _empty_figure("Every sweep point failed")
    df["series"] = [f"M = {int(m)}, upsilon = {u:g} m" for m, u in zip(df["irs_elements"], df["upsilon_m"])]
    df = df.sort_values(["series", "target_rate_bps_hz"])

    fig = px.line(
        df,
        x="target_rate_bps_hz",
        y="power_dbm",
        color="series",
        markers=True,
        hover_data=["iterations", "status"],
        title="Transmit Power versus Target Rate",
        labels={"target_rate_bps_hz": "Target rate (bits/s/Hz)", "power_dbm": "Transmit power (dBm)",
                "series": "Setting"}
    )
    return _style(fig)


def convergence_chart(df_trace):
    """Transmit power and SDR lower bound per outer iteration."""
    if df_trace.empty or "power_dbm" not in df_trace.columns:
        return _empty_figure("No iteration trace available")

    fig = go.Figure()
    fig.add_trace(go.Scatter(
        x=df_trace["iteration"],
        y=df_trace["power_dbm"],
        mode="lines+markers",
        name="Accepted power",
        marker_color='rgb(26, 118, 255)'
    ))
    if "sdr_bound_w" in df_trace.columns:
        bound = df_trace.dropna(subset=["sdr_bound_w"])
        bound = bound[bound["sdr_bound_w"] > 0]
        fig.add_trace(go.Scatter(
            x=bound["iteration"],
            y=10 * np.log10(bound["sdr_bound_w"]) + 30,
            mode="lines+markers",
            line=dict(dash="dot"),
            name="SDR lower bound",
            marker_color='rgb(246, 78, 139)'
        ))
    fig.update_layout(
        title="Alternating Optimization Convergence",
        xaxis_title="Iteration",
        yaxis_title="Power (dBm)"
    )
    return _style(fig)


def rate_vs_error_scatter(df, target_rate):
    """Per-trial rate against the location error norm."""
    if df.empty or "error_norm_m" not in df.columns or RATE_COLUMN not in df.columns:
        return _empty_figure("No per-trial error data available")

    if len(df) > 5000:
        df = df.sample(5000, random_state=0)
    fig = px.scatter(
        df,
        x="error_norm_m",
        y=RATE_COLUMN,
        opacity=0.5,
        title="Rate versus Location Error",
        labels={"error_norm_m": "Location error (m)", RATE_COLUMN: "Rate (bits/s/Hz)"}
    )
    fig.add_hline(y=target_rate, line_width=2, line_dash="dash", line_color="red")
    return _style(fig)
