import hashlib
import json
import logging
import re
from io import BytesIO, StringIO
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import pandas as pd
import streamlit as st
from pandas import ExcelWriter

import config

logger = logging.getLogger(__name__)

Report = Any  # DataFrame o informe con to_frame()
WORKBOOK_KEY = "libro"


def to_csv_text(df: pd.DataFrame) -> str:
    """CSV con 17 cifras significativas, '.' decimal y fin de línea '\\n'."""
    buffer = StringIO()
    df.to_csv(buffer, index=False, float_format=config.CSV_FLOAT_FORMAT,
              lineterminator=config.CSV_LINE_TERMINATOR)
    return buffer.getvalue()


def write_csv(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # newline="" para que el fin de línea no dependa de la plataforma
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv_text(df))
    logger.info("escrito %s (%d filas)", path, len(df))
    return path


def config_hash(config_text: str) -> str:
    return hashlib.sha256(config_text.encode("utf-8")).hexdigest()


def write_manifest(out_dir: Union[str, Path], subcommand: str, config_text: str, seed: int,
                   outputs: Iterable[str], summary: Optional[str] = None) -> Path:
    """manifest.json: hash de la configuración canónica, semilla y versión."""
    out_dir = Path(out_dir)
    manifest = {
        "subcommand": subcommand,
        "config_sha256": config_hash(config_text),
        "config": json.loads(config_text),
        "master_seed": int(seed),
        "version": config.VERSION,
        "outputs": sorted(outputs),
    }
    if summary is not None:
        manifest["summary"] = summary
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    return path


def _frame(report) -> pd.DataFrame:
    return report if isinstance(report, pd.DataFrame) else report.to_frame()


def button_key(name: str) -> str:
    """Clave de widget estable para el botón de descarga de un informe."""
    return "dl-" + re.sub(r"[^0-9A-Za-z_-]", "-", name)


class ExcelExporter:
    """Responsable de exportar informes y tablas de estadísticas a un libro Excel."""

    def __init__(self, reports: Dict[str, Report], verdicts: Optional[Dict[str, bool]] = None):
        """
        Inicializa el exportador.

        Args:
            reports (Dict[str, Report]): nombre de hoja → DataFrame u objeto con to_frame().
            verdicts (Dict[str, bool]): resultado PASS/FAIL de las pruebas que lo tienen.
        """
        self.reports = reports
        self.verdicts = verdicts or {}

    def validate(self) -> bool:
        """Valida que haya al menos un informe para exportar."""
        if not self.reports:
            st.error("No hay resultados para exportar todavía.")
            return False
        return True

    @staticmethod
    def _sheet_name(name: str) -> str:
        # Excel limita los nombres de hoja a 31 caracteres
        return name.replace("/", "_")[:31]

    def summary(self) -> pd.DataFrame:
        rows = []
        for name, report in self.reports.items():
            if hasattr(report, "summary_line"):
                rows.append({"informe": name, "resultado": report.summary_line()})
            elif name in self.verdicts:
                rows.append({"informe": name, "resultado": "PASS" if self.verdicts[name] else "FAIL"})
        return pd.DataFrame(rows, columns=["informe", "resultado"])

    def to_excel_bytes(self) -> bytes:
        """Genera el archivo Excel en memoria, una hoja por informe más el resumen."""
        writer = BytesIO()
        with ExcelWriter(writer, engine='xlsxwriter') as ew:
            for name, report in self.reports.items():
                _frame(report).to_excel(ew, sheet_name=self._sheet_name(name), index=False)
            summary = self.summary()
            if not summary.empty:
                summary.to_excel(ew, sheet_name='Resumen', index=False)
        return writer.getvalue()


class DownloadButtonStyler:
    """Colorea cada botón de descarga según el veredicto del informe que descarga."""

    COLORS = {True: "#116530", False: "#8b1e1e", None: "#1f4e79"}
    BASE = """
            div.stDownloadButton > button {
                color: #FAFAFA;
                border: none;
                width: auto;
                padding: 0.6em 1em;
                border-radius: 0.25em;
                font-weight: bold;
                background-color: %s;
            }"""

    @classmethod
    def css(cls, verdicts: Dict[str, Optional[bool]]) -> str:
        """Regla base más una regla por botón; sin veredicto se usa el color neutro."""
        rules = [cls.BASE % cls.COLORS[None]]
        for name, passed in verdicts.items():
            rules.append(f".st-key-{button_key(name)} button {{ background-color: {cls.COLORS[passed]}; }}")
        return "<style>\n" + "\n".join(rules) + "\n</style>"

    @classmethod
    def apply(cls, verdicts: Dict[str, Optional[bool]]) -> None:
        st.markdown(cls.css(verdicts), unsafe_allow_html=True)


def download_verdicts(reports: Dict[str, Report], verdicts: Dict[str, bool]) -> Dict[str, Optional[bool]]:
    """Veredicto por botón: uno por informe y el del libro completo (todas las pruebas)."""
    per_report = {name: verdicts.get(name) for name in reports}
    known = [v for v in per_report.values() if v is not None]
    per_report[WORKBOOK_KEY] = all(known) if known else None
    return per_report


def export_results(reports: Dict[str, Report], verdicts: Optional[Dict[str, bool]] = None,
                   file_name: str = "verificacion.xlsx") -> None:
    """
    Ofrece los informes de la sesión como libro Excel y como CSV individuales.

    Args:
        reports (Dict[str, Report]): informes acumulados en session_state.
        verdicts (Dict[str, bool]): resultado de cada prueba, para colorear su botón.
        file_name (str): nombre del libro descargado.
    """
    verdicts = verdicts or {}
    exporter = ExcelExporter(reports, verdicts)
    if not exporter.validate():
        return

    DownloadButtonStyler.apply(download_verdicts(reports, verdicts))
    st.download_button(
        "📥 Descargar Excel",
        data=exporter.to_excel_bytes(),
        file_name=file_name,
        key=button_key(WORKBOOK_KEY),
    )
    for name, report in reports.items():
        st.download_button(
            f"{name}.csv",
            data=to_csv_text(_frame(report)),
            file_name=f"{name}.csv",
            mime="text/csv",
            key=button_key(name),
        )
