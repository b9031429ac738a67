"""Jerarquía de errores del simulador."""

from typing import Optional


class SimulacionError(Exception):
    """Error base de todo el paquete."""


class ConfigError(SimulacionError, ValueError):
    """Configuración inválida; conserva la ruta de la clave ofensora."""

    def __init__(self, key_path: str, message: str):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}")


class ValidationError(SimulacionError, ValueError):
    """Objeto matemático mal formado (función de Young, especificación)."""


class TableRangeError(ValidationError):
    """Evaluación de una tabla numérica fuera de su rango."""


class Delta2Error(ValidationError):
    """La condición Δ₂ no se verifica en la rejilla de muestreo."""


class UnsupportedSchemeError(SimulacionError):
    """Combinación de esquema/configuración no soportada."""


class PreconditionError(SimulacionError, ValueError):
    """Precondición de una prueba de verificación no satisfecha."""


class BlowUpError(SimulacionError, RuntimeError):
    """El estado dejó de ser finito durante la integración."""

    def __init__(self, step: int, message: Optional[str] = None):
        self.step = step
        super().__init__(message or f"estado no finito en el paso {step}")


class StabilityError(BlowUpError):
    """Guardia de estabilidad del esquema explícito violada."""


class ConvergenceError(SimulacionError, RuntimeError):
    """Newton no alcanzó la tolerancia en el número máximo de iteraciones."""

    def __init__(self, step: int, residual: float):
        self.step = step
        self.residual = residual
        super().__init__(
            f"Newton no convergió en el paso {step} (residuo {residual:.3e})")
