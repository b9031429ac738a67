import streamlit as st

from cli import COMMANDS, Experiment
from utils.exceptions import SimulacionError
from utils.export import export_results

TESTS = ["ito-check", "contraction", "energy", "extinction", "ou-oracle", "ergodicity"]


class VerificationPage:
    """Página de pruebas de verificación y exportación de todos los informes."""

    @staticmethod
    def show() -> None:
        st.header("4. Verificación")
        if 'experiment_cfg' not in st.session_state:
            st.warning("Carga primero una configuración.")
            return

        test = st.selectbox("Prueba", TESTS)
        threads = st.number_input("Hilos (0 = automático)", min_value=0, max_value=64, value=1)
        if st.button("Ejecutar prueba"):
            try:
                with st.spinner(f"Ejecutando {test}..."):
                    exp = Experiment.build(st.session_state['experiment_cfg'],
                                           st.session_state['master_seed'], int(threads))
                    passed, summary, tables = COMMANDS[test](exp)
            except SimulacionError as e:
                st.error(f"{test}: {e}")
                return
            (st.success if passed else st.error)(summary)
            reports = st.session_state.setdefault('reports', {})
            verdicts = st.session_state.setdefault('verdicts', {})
            for file_name, table in tables.items():
                name = file_name.removesuffix(".csv")
                reports[name], verdicts[name] = table, passed
                st.dataframe(table)

        st.subheader("Exportar")
        export_results(st.session_state.get('reports', {}), st.session_state.get('verdicts', {}))


# Para compatibilidad
show = VerificationPage.show
