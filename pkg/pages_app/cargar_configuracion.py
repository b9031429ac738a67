import json
from dataclasses import asdict

import streamlit as st

from data.loader import ConfigLoader
from data.schema import resolve_seed
from utils.exceptions import ConfigError


class ConfigurationPage:
    """Página de carga y validación de la configuración del experimento."""

    @staticmethod
    def show() -> None:
        st.header("1. Configuración del experimento")

        if 'experiment_cfg' in st.session_state:
            st.info(f"Configuración activa: {st.session_state.get('config_name', 'sin nombre')}")

        references = ConfigLoader.reference_configs()
        names = ["(ninguna)"] + [p.name for p in references]
        choice = st.selectbox("Configuraciones de referencia", names, index=0)

        cfg, name = None, None
        if choice != "(ninguna)":
            try:
                cfg = ConfigLoader.from_path(references[names.index(choice) - 1])
                name = choice
            except ConfigError as e:
                st.error(f"Configuración inválida en '{e.key_path}': {e}")
                return
        uploaded = ConfigLoader.upload()
        if uploaded is not None:
            cfg, name = uploaded, "archivo cargado"

        if cfg is None:
            return

        st.success("Configuración validada correctamente.")
        st.json(json.dumps(asdict(cfg)))
        seed = resolve_seed(cfg)
        st.write(f"Semilla maestra efectiva: {seed}")

        if st.button("Usar esta configuración"):
            # los resultados de la configuración anterior dejan de ser válidos
            for key in ['stats', 'reports', 'verdicts', 'trajectory']:
                if key in st.session_state:
                    del st.session_state[key]
            st.session_state['experiment_cfg'] = cfg
            st.session_state['config_name'] = name
            st.session_state['master_seed'] = seed
            st.success(f"Configuración '{name}' activada.")


# Para compatibilidad
show = ConfigurationPage.show
