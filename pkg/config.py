"""Configuración global de la aplicación."""

VERSION: str = "0.4.0"

PAGE_CONFIG: dict = {
    "page_title": "Medio Poroso Estocástico",
    "layout": "wide",
    "page_icon": "🌊"
}
TITLE: str = "Simulador y Verificación de Ecuaciones de Medio Poroso Estocásticas"

# Rejillas de muestreo para funciones de Young y certificados de condiciones
S_GRID_MIN: float = 1e-4
S_GRID_MAX: float = 1e4
S_GRID_POINTS: int = 81
DELTA2_S_RANGE: tuple = (1e-3, 1e3)
DELTA2_R_MAX_EXPONENT: int = 10
DELTA2_SATURATION: float = 1.25
NUMERIC_TOL: float = 1e-9

# Dual de Legendre y norma de Luxemburg
DUAL_XATOL: float = 1e-12
DUAL_MAX_DOUBLINGS: int = 200
LUXEMBURG_RTOL: float = 1e-10

# Estimación de ||L^{-1}|| en L^p
LINV_SAMPLES: int = 200
LINV_INFLATION: float = 1.5
LINV_SEED: int = 20_240_917

# Certificados (H1)-(H4)
CHECK_SAMPLES: int = 1000
FIELD_DECAY: float = 1.5
H1_CONTINUITY_RATIO: float = 0.9

# Integrador de Galerkin
DEFAULT_IMPLICIT_TOL: float = 1e-10
DEFAULT_IMPLICIT_MAX_ITER: int = 100
JACOBIAN_ZETA: float = 1e-8
STABILITY_LIMIT: float = 2.0
ENSEMBLE_CHUNK: int = 256

# Verificación
SE_BAND: float = 3.0
SLOPE_TRANSIENT: float = 0.1
SLOPE_FLOOR: float = 1e-12
MIN_CONTRACTION_PATHS: int = 100
ITO_SKELETON_RTOL: float = 1e-10

# Salida
CSV_FLOAT_FORMAT: str = "%.17g"
CSV_LINE_TERMINATOR: str = "\n"
SEED_ENV_VAR: str = "SPME_SEED"
CONFIG_DIR: str = "configs"
