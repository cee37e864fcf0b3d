import streamlit as st
import pandas as pd

from tabs.overview import show_overview_tab
from tabs.rate_analysis import show_rate_analysis_tab
from tabs.sweep import show_sweep_tab
from tabs.convergence import show_convergence_tab
from tabs.explorer import show_explorer_tab

st.set_page_config(page_title="IRS Robust Beamforming Results", layout="wide")


def _read_upload(label):
    uploaded_file = st.sidebar.file_uploader(label, type=["csv"])
    if uploaded_file is None:
        return pd.DataFrame()
    return pd.read_csv(uploaded_file)


def main():
    st.title("Robust IRS Beamforming: Result Viewer")

    # The viewer only reads CSV files written by cli.py; it never runs the optimizer
    df_robust = _read_upload("Evaluation CSV (robust)")
    df_nonrobust = _read_upload("Evaluation CSV (non-robust, optional)")
    df_sweep = _read_upload("Sweep CSV")
    df_trace = _read_upload("Design trace CSV")
    target_rate = st.sidebar.number_input("Target rate (bits/s/Hz)", min_value=0.0, value=4.0, step=0.5)

    tabs = st.tabs([
        "Overview",
        "Rate Distribution",
        "Power Sweep",
        "Convergence",
        "Data Explorer",
    ])

    with tabs[0]:
        show_overview_tab(df_robust, df_nonrobust, df_sweep, df_trace, target_rate)

    with tabs[1]:
        show_rate_analysis_tab(df_robust, df_nonrobust, target_rate)

    with tabs[2]:
        show_sweep_tab(df_sweep)

    with tabs[3]:
        show_convergence_tab(df_trace)

    with tabs[4]:
        show_explorer_tab({
            "Robust Trials": df_robust,
            "Non-robust Trials": df_nonrobust,
            "Sweep": df_sweep,
            "Trace": df_trace,
        })


if __name__ == "__main__":
    main()
