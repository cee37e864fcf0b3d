import streamlit as st


def show_explorer_tab(tables):
    """
    Display raw result tables for exploration

    :param tables: Mapping of table title to DataFrame
    """
    st.header("Data Explorer")

    for title, df in tables.items():
        st.subheader(title)
        if not df.empty:
            with st.expander(f"View {title.lower()}", expanded=False):
                st.dataframe(df)
        else:
            st.info(f"No {title.lower()} loaded.")

    st.subheader("Download Data")
    columns = st.columns(len(tables))
    for col, (title, df) in zip(columns, tables.items()):
        with col:
            if not df.empty:
                st.download_button(
                    label=f"Download {title} CSV",
                    data=df.to_csv(index=False).encode('utf-8'),
                    file_name=f"irs_{title.lower().replace(' ', '_')}.csv",
                    mime="text/csv"
                )
