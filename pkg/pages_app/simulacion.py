import streamlit as st

from cli import Experiment, cmd_simulate
from utils.exceptions import SimulacionError
from utils.export import to_csv_text


class SimulationPage:
    """Página para ejecutar el conjunto Monte Carlo y consultar la StatTable."""

    @staticmethod
    def show() -> None:
        st.header("2. Simulación")
        if 'experiment_cfg' not in st.session_state:
            st.warning("Carga primero una configuración en la pestaña anterior.")
            return
        cfg = st.session_state['experiment_cfg']
        threads = st.number_input("Hilos (0 = automático)", min_value=0, max_value=64, value=1)

        if st.button("Ejecutar simulación"):
            try:
                with st.spinner("Integrando trayectorias..."):
                    exp = Experiment.build(cfg, st.session_state['master_seed'], int(threads))
                    _, summary, tables = cmd_simulate(exp)
            except SimulacionError as e:
                st.error(f"La simulación falló: {e}")
                return
            st.session_state['trajectory'] = tables['trajectory.csv']
            if 'stats.csv' in tables:
                st.session_state['stats'] = tables['stats.csv']
            st.session_state.setdefault('reports', {})['simulacion'] = tables.get(
                'stats.csv', tables['trajectory.csv'])
            st.success(summary)

        if 'trajectory' in st.session_state:
            st.subheader("Trayectoria de la ruta 0")
            st.dataframe(st.session_state['trajectory'])
        if 'stats' in st.session_state:
            st.subheader("Estadísticas del conjunto")
            st.dataframe(st.session_state['stats'])
            st.download_button("Descargar CSV", data=to_csv_text(st.session_state['stats']),
                               file_name="stats.csv")


# Para compatibilidad
show = SimulationPage.show
