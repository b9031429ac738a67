from pathlib import Path
from typing import List, Optional, Union

import streamlit as st

import config
from data.schema import ExperimentConfig, loads
from utils.exceptions import ConfigError


class ConfigLoader:
    """Responsable de cargar configuraciones de experimento."""

    @staticmethod
    def from_text(text: str) -> ExperimentConfig:
        return loads(text)

    @staticmethod
    def from_path(path: Union[str, Path]) -> ExperimentConfig:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError("<archivo>", f"no se pudo leer {path}: {e}") from e
        return loads(text)

    @staticmethod
    def reference_configs(directory: Union[str, Path] = config.CONFIG_DIR) -> List[Path]:
        """Configuraciones de referencia incluidas en el repositorio."""
        return sorted(Path(directory).glob("*.json"))

    @staticmethod
    def upload(label: str = "Carga tu configuración JSON") -> Optional[ExperimentConfig]:
        uploaded = st.file_uploader(label, type="json")
        if uploaded:
            try:
                return loads(uploaded.getvalue().decode("utf-8"))
            except (ConfigError, UnicodeDecodeError) as e:
                st.error(f"Error cargando la configuración: {e}")
        return None


# Para compatibilidad
load_config = ConfigLoader.from_path
