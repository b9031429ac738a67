import streamlit as st

from cli import Experiment, cmd_check_conditions
from utils.exceptions import SimulacionError


class ConditionsPage:
    """Página de certificados numéricos de las hipótesis sobre Ψ, Φ y el ruido."""

    @staticmethod
    def show() -> None:
        st.header("3. Condiciones")
        if 'experiment_cfg' not in st.session_state:
            st.warning("Carga primero una configuración.")
            return

        if st.button("Verificar condiciones"):
            try:
                with st.spinner("Muestreando desigualdades..."):
                    exp = Experiment.build(st.session_state['experiment_cfg'],
                                           st.session_state['master_seed'], 1)
                    passed, summary, tables = cmd_check_conditions(exp)
            except SimulacionError as e:
                st.error(f"No se pudieron verificar las condiciones: {e}")
                return
            st.session_state.setdefault('reports', {})['condiciones'] = tables['conditions.csv']
            st.session_state.setdefault('verdicts', {})['condiciones'] = passed
            for line in summary.split(" ; "):
                (st.success if line.startswith("PASS") else st.error)(line)

        if 'condiciones' in st.session_state.get('reports', {}):
            st.dataframe(st.session_state['reports']['condiciones'].T)


# Para compatibilidad
show = ConditionsPage.show
