"""Incrementos de Wiener cilíndrico y operadores de difusión de Hilbert–Schmidt.

B actúa diagonalmente en la base seno: (B(X) dW)̂_k = ρ(‖X‖_H)·σ_k·dW_k,
con ρ un factor escalar acotado y Lipschitz.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from utils.exceptions import ValidationError
from utils.triple import Field, SpectralDomain, h_norm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultFactor:
    """ρ(x) = ρ_min + (ρ_max − ρ_min)/(1 + κx), acotado en [ρ_min, ρ_max]."""

    rho_min: float = 1.0
    rho_max: float = 1.0
    kappa: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rho_min <= self.rho_max:
            raise ValidationError("se requiere 0 ≤ rho_min ≤ rho_max")
        if self.kappa < 0:
            raise ValidationError("kappa debe ser no negativo")

    @classmethod
    def constant(cls, rho: float = 1.0) -> "MultFactor":
        return cls(rho_min=rho, rho_max=rho, kappa=0.0)

    @property
    def is_constant(self) -> bool:
        return self.rho_min == self.rho_max or self.kappa == 0.0

    @property
    def lipschitz(self) -> float:
        return 0.0 if self.is_constant else (self.rho_max - self.rho_min) * self.kappa

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_constant:
            return np.full_like(x, self.rho_max)
        return self.rho_min + (self.rho_max - self.rho_min) / (1.0 + self.kappa * x)


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Amplitudes por modo σ_k y factor multiplicativo ρ."""

    sigma: np.ndarray
    mult: MultFactor = field(default_factory=MultFactor)

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float)
        if sigma.ndim != 1 or sigma.size == 0:
            raise ValidationError("sigma debe ser un vector no vacío")
        if np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
            raise ValidationError("las amplitudes sigma deben ser finitas y no negativas")
        sigma.flags.writeable = False
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_decay(cls, sigma0: float, beta: float, n_modes: int,
                   mult: Optional[MultFactor] = None) -> "NoiseSpec":
        """σ_k = σ₀·k^{−β} para k = 1..n_modes."""
        k = np.arange(1, int(n_modes) + 1)
        return cls(sigma0 * k ** (-float(beta)), mult or MultFactor())

    @property
    def n_modes(self) -> int:
        return int(self.sigma.size)

    @property
    def is_additive(self) -> bool:
        return self.mult.is_constant

    @property
    def is_zero(self) -> bool:
        return not np.any(self.sigma) or self.mult.rho_max == 0.0

    def check_domain(self, dom: SpectralDomain) -> None:
        if self.n_modes > dom.n_grid:
            raise ValidationError(
                f"el ruido retiene {self.n_modes} modos pero la rejilla tiene {dom.n_grid}")


def sample_increment(spec: NoiseSpec, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Incremento N(0, dt) independiente por modo retenido."""
    if dt < 0:
        raise ValidationError("dt debe ser no negativo")
    if dt == 0:
        return np.zeros(spec.n_modes)
    return rng.standard_normal(spec.n_modes) * np.sqrt(dt)


def hs0_sq(spec: NoiseSpec, dom: SpectralDomain) -> float:
    """Σ σ_k²/λ_k, norma HS al cuadrado de B con ρ ≡ 1."""
    spec.check_domain(dom)
    return float(np.sum(spec.sigma ** 2 / dom.eigenvalues[:spec.n_modes]))


def hs_norm_sq(spec: NoiseSpec, dom: SpectralDomain, X: Field) -> float:
    rho = float(spec.mult(h_norm(dom, X)))
    return rho ** 2 * hs0_sq(spec, dom)


def apply_B(spec: NoiseSpec, dom: SpectralDomain, X: Field, dW: np.ndarray) -> Field:
    dW = np.asarray(dW, dtype=float)
    if dW.shape != (spec.n_modes,):
        raise ValidationError(
            f"dW tiene dimensión {dW.shape}, se esperaban {spec.n_modes} modos")
    spec.check_domain(dom)
    coefs = np.zeros(dom.n_grid)
    coefs[:spec.n_modes] = float(spec.mult(h_norm(dom, X))) * spec.sigma * dW
    return dom.field_from_spectral(coefs)


def diffusion_coefficients(spec: NoiseSpec, rho: np.ndarray, n_modes: int) -> np.ndarray:
    """Coeficientes Z por modo (primeros n_modes) para un lote de valores de ρ."""
    n = min(spec.n_modes, n_modes)
    Z = np.zeros(np.shape(rho) + (n_modes,))
    Z[..., :n] = np.asarray(rho)[..., None] * spec.sigma[:n]
    return Z


class BrownianPath:
    """Trayectoria browniana reproducible de una ruta con refinamiento diádico.

    Los incrementos raíz (paso dt_root) salen de un flujo hijo de la semilla
    maestra identificado por path_idx. Cada nivel de refinamiento parte cada
    incremento en dos mediante el puente browniano, con un flujo propio por
    (path_idx, nivel), de modo que las sumas por pares reproducen el nivel
    anterior.
    """

    def __init__(self, master_seed: int, path_idx: int, n_modes: int,
                 dt_root: float, level: int = 0):
        if level < 0:
            raise ValidationError("el nivel de refinamiento debe ser ≥ 0")
        if dt_root <= 0:
            raise ValidationError("dt_root debe ser positivo")
        self.master_seed = int(master_seed)
        self.path_idx = int(path_idx)
        self.n_modes = int(n_modes)
        self.dt_root = float(dt_root)
        self.level = int(level)

    @property
    def dt(self) -> float:
        return self.dt_root / 2 ** self.level

    def _rng(self, *key: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.path_idx,) + key)
        return np.random.default_rng(seq)

    def increments(self, n_root_steps: int) -> np.ndarray:
        """Incrementos al paso dt, forma (n_root_steps·2^level, n_modes)."""
        dW = self._rng().standard_normal((int(n_root_steps), self.n_modes)) * np.sqrt(self.dt_root)
        delta = self.dt_root
        for lvl in range(1, self.level + 1):
            z = self._rng(lvl).standard_normal(dW.shape)
            left = 0.5 * dW + np.sqrt(delta / 4.0) * z
            dW = np.stack((left, dW - left), axis=1).reshape(-1, self.n_modes)
            delta /= 2.0
        return dW
