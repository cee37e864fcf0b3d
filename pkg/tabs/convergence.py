import streamlit as st
from analysis import trace_increases
from visualizations import convergence_chart


def show_convergence_tab(df_trace):
    st.header("Convergence")

    if df_trace.empty:
        st.info("No iteration trace available. Upload the <design>.trace.csv written by 'cli.py design'.")
        return

    col1, col2, col3 = st.columns(3)
    col1.metric("Iterations", f"{int(df_trace['iteration'].max())}")
    col2.metric("Rejected w-steps", f"{int((~df_trace['accepted_w'].astype(bool)).sum())}")
    col3.metric("Power Increases", f"{trace_increases(df_trace)}")

    st.plotly_chart(convergence_chart(df_trace), use_container_width=True)
