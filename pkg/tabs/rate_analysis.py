import streamlit as st
from analysis import compare_reports
from visualizations import SCHEME_COLORS, rate_cdf_chart, rate_histogram, rate_vs_error_scatter


def show_rate_analysis_tab(df_robust, df_nonrobust, target_rate):
    """Display rate distributions of the robust and non-robust designs"""
    st.header("Rate Distribution")

    if df_robust.empty:
        st.error("No evaluation data found. Upload the per-trial CSV written by 'cli.py evaluate'.")
        return

    rate_tabs = st.tabs(["Histogram", "CDF", "Rate vs Error"])

    with rate_tabs[0]:
        st.plotly_chart(rate_histogram(df_robust, target_rate, "Robust Design", SCHEME_COLORS["robust"]),
                        use_container_width=True)
        if not df_nonrobust.empty:
            st.plotly_chart(rate_histogram(df_nonrobust, target_rate, "Non-robust Design",
                                           SCHEME_COLORS["nonrobust"]),
                            use_container_width=True)

    with rate_tabs[1]:
        st.plotly_chart(rate_cdf_chart({"robust": df_robust, "nonrobust": df_nonrobust}, target_rate),
                        use_container_width=True)
        if not df_nonrobust.empty:
            st.subheader("Side by Side")
            st.dataframe(compare_reports(df_robust, df_nonrobust, target_rate))

    with rate_tabs[2]:
        st.plotly_chart(rate_vs_error_scatter(df_robust, target_rate), use_container_width=True)
