"""Terna de Gelfand discretizada V ⊂ H ⊂ V* sobre (0,1).

El operador L es el Laplaciano de Dirichlet (fraccionario) definido
espectralmente a partir de los autovalores del Laplaciano de diferencias
finitas de tres puntos; H es el espacio de Green con producto
⟨u,v⟩_H = Σ_k û_k v̂_k / λ_k.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from utils.exceptions import ValidationError
from utils.orlicz import DiscreteMeasure, YoungFunction, luxemburg_norm


class SpectralDomain:
    """Rejilla interior de (0,1) con autopares seno discretos del Laplaciano."""

    def __init__(self, n_grid: int, alpha: float = 1.0):
        if int(n_grid) != n_grid or n_grid < 1:
            raise ValidationError("n_grid debe ser un entero positivo")
        if not 0.0 < alpha <= 1.0:
            raise ValidationError("alpha debe pertenecer a (0, 1]")
        self.n_grid = int(n_grid)
        self.alpha = float(alpha)
        self.h = 1.0 / (self.n_grid + 1)
        self.x = self.h * np.arange(1, self.n_grid + 1)
        k = np.arange(1, self.n_grid + 1)
        self.fd_eigenvalues = (2.0 / self.h ** 2) * (1.0 - np.cos(k * np.pi * self.h))
        self.eigenvalues = self.fd_eigenvalues ** self.alpha
        # fila k-1 = s_k evaluado en la rejilla; ortonormal bajo h·Σ
        self.basis = np.sqrt(2.0) * np.sin(np.pi * np.outer(k, self.x))
        self.measure = DiscreteMeasure(np.full(self.n_grid, self.h))
        for arr in (self.x, self.fd_eigenvalues, self.eigenvalues, self.basis):
            arr.flags.writeable = False

    def __repr__(self) -> str:
        return f"SpectralDomain(n_grid={self.n_grid}, alpha={self.alpha})"

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        return self.h * (np.asarray(values, dtype=float) @ self.basis.T)

    def from_spectral(self, coefs: np.ndarray) -> np.ndarray:
        return np.asarray(coefs, dtype=float) @ self.basis

    def field(self, values) -> "Field":
        values = np.array(values, dtype=float)
        if values.shape != (self.n_grid,):
            raise ValidationError(f"se esperaban {self.n_grid} valores, hay {values.shape}")
        return Field(self, values)

    def field_from_spectral(self, coefs) -> "Field":
        coefs = np.array(coefs, dtype=float)
        if coefs.shape != (self.n_grid,):
            raise ValidationError(f"se esperaban {self.n_grid} coeficientes, hay {coefs.shape}")
        f = Field(self, self.from_spectral(coefs))
        f.__dict__["coefficients"] = coefs
        return f

    def zeros(self) -> "Field":
        return self.field_from_spectral(np.zeros(self.n_grid))

    def basis_field(self, k: int) -> "Field":
        """s_k (1 ≤ k ≤ n_grid)."""
        coefs = np.zeros(self.n_grid)
        coefs[k - 1] = 1.0
        return self.field_from_spectral(coefs)

    def h_orthonormal_field(self, k: int) -> "Field":
        """ê_k = √λ_k s_k, base ortonormal de H."""
        return self.basis_field(k) * float(np.sqrt(self.eigenvalues[k - 1]))

    def h_inner_coefs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.sum(a * b / self.eigenvalues, axis=-1)

    def operator_matrix(self) -> np.ndarray:
        """Matriz densa de L en la rejilla."""
        return self.h * (self.basis.T * -self.eigenvalues) @ self.basis


@dataclass(frozen=True, eq=False)
class Field:
    """Estado en la rejilla con coeficientes espectrales perezosos."""

    domain: SpectralDomain
    values: np.ndarray

    @cached_property
    def coefficients(self) -> np.ndarray:
        return self.domain.to_spectral(self.values)

    def _wrap(self, coefs: np.ndarray) -> "Field":
        return self.domain.field_from_spectral(coefs)

    def __add__(self, other: "Field") -> "Field":
        return self._wrap(self.coefficients + other.coefficients)

    def __sub__(self, other: "Field") -> "Field":
        return self._wrap(self.coefficients - other.coefficients)

    def __mul__(self, scalar: float) -> "Field":
        return self._wrap(self.coefficients * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self * -1.0

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def apply_L(dom: SpectralDomain, f: Field) -> Field:
    return dom.field_from_spectral(-dom.eigenvalues * f.coefficients)


def apply_Linv(dom: SpectralDomain, f: Field) -> Field:
    return dom.field_from_spectral(-f.coefficients / dom.eigenvalues)


def h_inner(dom: SpectralDomain, u: Field, v: Field) -> float:
    return float(dom.h_inner_coefs(u.coefficients, v.coefficients))


def h_norm(dom: SpectralDomain, u: Field) -> float:
    return float(np.sqrt(h_inner(dom, u, u)))


def l2_inner(dom: SpectralDomain, u: Field, v: Field) -> float:
    return float(dom.measure(u.values * v.values))


def v_norm(dom: SpectralDomain, N: YoungFunction, m: Optional[DiscreteMeasure], u: Field) -> float:
    """‖u‖_V = ‖u‖_{L_N} + ‖u‖_H."""
    m = m or dom.measure
    return luxemburg_norm(u.values, N, m) + h_norm(dom, u)


def project(dom: SpectralDomain, n_modes: int, u: Field) -> Field:
    """Proyección ortogonal P_n sobre span{s_1..s_n}."""
    if int(n_modes) != n_modes or not 1 <= n_modes <= dom.n_grid:
        raise ValidationError(f"n_modes={n_modes} fuera de [1, {dom.n_grid}]")
    coefs = u.coefficients.copy()
    coefs[int(n_modes):] = 0.0
    return dom.field_from_spectral(coefs)


def pairing_vstar_v(dom: SpectralDomain, psi_values: Field, u: Field) -> float:
    """⟨LΨ(v), u⟩_{V*,V} = −m(Ψ(v)·u)."""
    return -float(dom.measure(psi_values.values * u.values))


def pairing_via_h(dom: SpectralDomain, psi_values: Field, u: Field) -> float:
    """Misma dualidad evaluada como ⟨LΨ(v), u⟩_H en coordenadas espectrales."""
    return h_inner(dom, apply_L(dom, psi_values), u)


def random_field(dom: SpectralDomain, rng: np.random.Generator, decay: float = 1.5,
                 amplitude: float = 1.0, n_modes: Optional[int] = None) -> Field:
    """Campo gaussiano con decaimiento espectral k^{-decay}."""
    n = n_modes or dom.n_grid
    k = np.arange(1, dom.n_grid + 1)
    coefs = rng.standard_normal(dom.n_grid) * k ** (-float(decay)) * amplitude
    coefs[n:] = 0.0
    return dom.field_from_spectral(coefs)


def bump_field(dom: SpectralDomain, center: float = 0.5, width: float = 0.25,
               amplitude: float = 1.0) -> Field:
    """Meseta suave de soporte compacto con máximo `amplitude` en `center`."""
    z = (dom.x - center) / width
    values = np.zeros(dom.n_grid)
    inside = np.abs(z) < 1.0
    values[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
    return dom.field(values)


def eigenmode_field(dom: SpectralDomain, k: int = 1, amplitude: float = 1.0) -> Field:
    if not 1 <= k <= dom.n_grid:
        raise ValidationError(f"modo {k} fuera de [1, {dom.n_grid}]")
    return dom.basis_field(k) * amplitude
