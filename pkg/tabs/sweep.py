import streamlit as st
import pandas as pd
from analysis import monotonicity_violations
from visualizations import power_vs_rate_chart


def show_sweep_tab(df_sweep):
    """Display the power sweep and any trend violations"""
    st.header("Power Sweep")

    if df_sweep.empty:
        st.info("No sweep data available. Upload the CSV written by 'cli.py sweep'.")
        return

    st.plotly_chart(power_vs_rate_chart(df_sweep), use_container_width=True)

    violations = monotonicity_violations(df_sweep)
    if violations:
        st.warning(f"{len(violations)} trend violation(s) in the grid")
        rows = [{
            "axis": axis,
            "from": before[axis],
            "to": after[axis],
            "power_before_w": before["power_w"],
            "power_after_w": after["power_w"],
        } for axis, before, after in violations]
        st.dataframe(pd.DataFrame(rows))
    else:
        st.success("Power follows the expected trends in r, upsilon and M.")

    failed = df_sweep[df_sweep["status"] == "failed"]
    if not failed.empty:
        st.subheader("Failed Points")
        st.dataframe(failed[["target_rate_bps_hz", "upsilon_m", "irs_elements", "reason"]])
