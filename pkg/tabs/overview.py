import streamlit as st
import plotly.express as px
from analysis import RATE_COLUMN, count_monotonicity_violations, summarize_rates


def show_overview_tab(df_robust, df_nonrobust, df_sweep, df_trace, target_rate):
    """
    Display the Overview tab with headline metrics of the uploaded results.
    """
    st.header("Overview")

    if df_robust.empty and df_sweep.empty and df_trace.empty:
        st.info("Upload an evaluation, sweep or trace CSV written by cli.py to get started.")
        return

    if not df_robust.empty:
        stats = summarize_rates(df_robust[RATE_COLUMN], target_rate)
        col1, col2, col3, col4 = st.columns(4)
        col1.metric("Trials", f"{stats['trials']}")
        col2.metric("Min Rate", f"{stats['min_rate']:.3f} bits/s/Hz")
        col3.metric("Outage at r", f"{100 * stats['outage']:.2f}%")
        col4.metric("Outage at r - 0.1", f"{100 * stats['outage_relaxed']:.2f}%")

    if not df_nonrobust.empty:
        stats = summarize_rates(df_nonrobust[RATE_COLUMN], target_rate)
        col1, col2, col3 = st.columns(3)
        col1.metric("Non-robust Min Rate", f"{stats['min_rate']:.3f} bits/s/Hz")
        col2.metric("Non-robust Outage", f"{100 * stats['outage']:.2f}%")
        col3.metric("Non-robust Spread", f"{stats['spread']:.3f} bits/s/Hz")

    if not df_trace.empty:
        col1, col2 = st.columns(2)
        col1.metric("Final Power", f"{df_trace['power_dbm'].iloc[-1]:.2f} dBm")
        col2.metric("Outer Iterations", f"{int(df_trace['iteration'].max())}")

    st.subheader("Sweep Status")
    if not df_sweep.empty:
        status_count = df_sweep["status"].value_counts().reset_index()
        status_count.columns = ["status", "count"]

        fig_status = px.bar(
            status_count,
            x="status",
            y="count",
            title="Sweep Points by Status",
            labels={"count": "Count", "status": "Status"},
            color="status",
            color_discrete_map={
                "ok": "green",
                "uncertified": "orange",
                "failed": "red"
            }
        )
        fig_status.update_traces(marker_line_color='rgba(0,0,0,0.5)', marker_line_width=1)
        st.plotly_chart(fig_status, use_container_width=True)
        st.caption(f"Trend violations across the grid: {count_monotonicity_violations(df_sweep)}")
    else:
        st.info("No sweep data available.")
