import streamlit as st

import config
from pages_app import cargar_configuracion, condiciones, simulacion, verificacion

DEFAULT_PAGE = "Configuración"

PAGES = {
    "Configuración": cargar_configuracion,
    "Simulación": simulacion,
    "Condiciones": condiciones,
    "Verificación": verificacion,
}


def sidebar_status() -> None:
    """Resumen del experimento cargado y de los informes acumulados."""
    st.sidebar.divider()
    name = st.session_state.get("config_name")
    if name:
        st.sidebar.success(f"Configuración: {name}")
        st.sidebar.caption(f"Semilla maestra: {st.session_state.get('master_seed', 0)}")
    else:
        st.sidebar.info("Sin configuración cargada")
    n_reports = len(st.session_state.get("reports", {}))
    if n_reports:
        st.sidebar.caption(f"Informes en la sesión: {n_reports}")
    st.sidebar.caption(f"Versión {config.VERSION}")


def main() -> None:
    st.set_page_config(**config.PAGE_CONFIG)
    st.title(config.TITLE)

    st.session_state.setdefault("selected_page", DEFAULT_PAGE)

    st.sidebar.title("Navegación")
    for page_name in PAGES:
        if st.sidebar.button(page_name, use_container_width=True):
            st.session_state.selected_page = page_name
    sidebar_status()

    PAGES[st.session_state.selected_page].show()


if __name__ == "__main__":
    main()
