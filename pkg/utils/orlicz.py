"""Funciones de Young, duales, regularidad Δ₂ y normas de Luxemburg."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

import config
from utils.exceptions import Delta2Error, TableRangeError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Medida discreta m(f) = Σ w_i f_i sobre los nodos de la rejilla."""

    weights: np.ndarray
    finite: bool = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or not np.all(w > 0):
            raise ValidationError("los pesos de la medida deben ser positivos")
        object.__setattr__(self, "weights", w)

    def __call__(self, f) -> np.ndarray:
        return np.asarray(f, dtype=float) @ self.weights

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


class YoungFunction:
    """Interfaz para funciones de Young N (pares, convexas, N(0)=0)."""

    domain_max: float = math.inf

    def _eval_abs(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _derivative_abs(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_range(self, a: np.ndarray) -> None:
        if np.any(a > self.domain_max):
            raise TableRangeError(
                f"argumento {float(np.max(a)):.6g} fuera del rango "
                f"[0, {self.domain_max:.6g}] de la tabla")

    def __call__(self, s):
        a = np.abs(np.asarray(s, dtype=float))
        self._check_range(a)
        return self._eval_abs(a)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        self._check_range(a)
        return np.sign(s) * self._derivative_abs(a)

    def dual(self) -> "YoungFunction":
        return DualYoungFunction(self)

    def delta2_constant(self, finite_measure: bool = True) -> float:
        """Constante C de Δ₂, calculada una vez por valor de 1_fin."""
        return self._delta2("C", finite_measure, _delta2_constant)

    def delta2_exponent(self, finite_measure: bool = True) -> float:
        return self._delta2("q", finite_measure, _delta2_exponent)

    def _delta2(self, name: str, finite_measure: bool, compute) -> float:
        cache = self.__dict__.setdefault("_delta2_cache", {})
        key = (name, bool(finite_measure))
        if key not in cache:
            cache[key] = compute(self, bool(finite_measure))
        return cache[key]

    def validate(self, grid: Optional[np.ndarray] = None) -> None:
        """Comprueba en una rejilla logarítmica las propiedades de función de Young."""
        if grid is None:
            top = min(config.S_GRID_MAX, self.domain_max)
            grid = np.logspace(np.log10(config.S_GRID_MIN), np.log10(top),
                               config.S_GRID_POINTS)
        s = np.asarray(grid, dtype=float)
        values = self(s)
        if float(self(0.0)) != 0.0:
            raise ValidationError("N(0) debe ser 0")
        if not np.allclose(self(-s), values, rtol=1e-12, atol=0.0):
            raise ValidationError("N debe ser par")
        if np.any(np.diff(values) <= 0):
            raise ValidationError("N debe ser estrictamente creciente en [0, ∞)")
        slopes = np.diff(values) / np.diff(s)
        if np.any(np.diff(slopes) < -config.NUMERIC_TOL * np.abs(slopes[1:])):
            raise ValidationError("N debe ser convexa")
        ratio = values / s
        if np.any(np.diff(ratio) < -config.NUMERIC_TOL * ratio[1:]) or not ratio[-1] > ratio[0]:
            raise ValidationError("N(s)/s debe crecer de 0 a ∞")


class PowerSum(YoungFunction):
    """N(s) = Σ c_i |s|^{p_i} con c_i > 0 y p_i > 1."""

    def __init__(self, coeffs: Sequence[float], exponents: Sequence[float]):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.exponents = np.asarray(exponents, dtype=float)
        if self.coeffs.shape != self.exponents.shape or self.coeffs.size == 0:
            raise ValidationError("coeficientes y exponentes deben tener la misma longitud")
        if np.any(self.coeffs <= 0) or np.any(self.exponents <= 1):
            raise ValidationError("PowerSum requiere c_i > 0 y p_i > 1")

    def _eval_abs(self, a):
        a = np.asarray(a)
        return np.sum(self.coeffs * a[..., None] ** self.exponents, axis=-1)

    def _derivative_abs(self, a):
        a = np.asarray(a)
        return np.sum(self.coeffs * self.exponents * a[..., None] ** (self.exponents - 1), axis=-1)

    @property
    def single_power(self) -> bool:
        return self.coeffs.size == 1

    def dual(self) -> YoungFunction:
        if not self.single_power:
            return DualYoungFunction(self)
        c, p = float(self.coeffs[0]), float(self.exponents[0])
        p_dual = p / (p - 1.0)
        c_dual = (p - 1.0) / p * (c * p) ** (-1.0 / (p - 1.0))
        return PowerSum([c_dual], [p_dual])


class LogPower(YoungFunction):
    """N(s) = k·|s|^θ (log(1+|s|))^r con θ > 1, r ≥ 1 y escala k > 0."""

    def __init__(self, theta: float, r: float, scale: float = 1.0):
        if theta <= 1 or r < 1 or scale <= 0:
            raise ValidationError("LogPower requiere θ > 1, r ≥ 1 y escala positiva")
        self.theta = float(theta)
        self.r = float(r)
        self.scale = float(scale)

    def _eval_abs(self, a):
        return self.scale * a ** self.theta * np.log1p(a) ** self.r

    def _derivative_abs(self, a):
        log = np.log1p(a)
        return self.scale * (self.theta * a ** (self.theta - 1) * log ** self.r
                             + a ** self.theta * self.r * log ** (self.r - 1) / (1 + a))


class NumericTable(YoungFunction):
    """Función de Young tabulada con interpolación cúbica monótona, sin extrapolación."""

    def __init__(self, s_values: Sequence[float], n_values: Sequence[float]):
        s = np.asarray(s_values, dtype=float)
        n = np.asarray(n_values, dtype=float)
        if s.ndim != 1 or s.shape != n.shape or s.size < 3:
            raise ValidationError("la tabla necesita al menos 3 nodos")
        if s[0] != 0.0 or n[0] != 0.0:
            raise ValidationError("la tabla debe comenzar en (0, 0)")
        if np.any(np.diff(s) <= 0) or np.any(np.diff(n) <= 0):
            raise ValidationError("la tabla debe ser estrictamente monótona")
        self._interp = PchipInterpolator(s, n, extrapolate=False)
        self._slope = self._interp.derivative()
        self.domain_max = float(s[-1])

    def _eval_abs(self, a):
        return self._interp(a)

    def _derivative_abs(self, a):
        return self._slope(a)


class DualYoungFunction(YoungFunction):
    """N*(s) = sup_{r≥0}(r|s| − N(r)) evaluada por maximización acotada."""

    def __init__(self, base: YoungFunction):
        self.base = base

    def _maximizer(self, a: float) -> Tuple[float, float]:
        if a == 0.0:
            return 0.0, 0.0
        r_hi = min(1.0, self.base.domain_max)
        doublings = 0
        # duplicar hasta que la derivada de r|s| − N(r) cambie de signo
        while float(self.base._derivative_abs(np.asarray(r_hi))) < a:
            if doublings >= config.DUAL_MAX_DOUBLINGS or r_hi >= self.base.domain_max:
                raise ValidationError("dual degenerado: N no es superlineal en el rango")
            r_hi = min(2.0 * r_hi, self.base.domain_max)
            doublings += 1
        result = minimize_scalar(lambda r: float(self.base._eval_abs(np.asarray(r))) - a * r,
                                 bounds=(0.0, r_hi), method="bounded",
                                 options={"xatol": config.DUAL_XATOL})
        value = -float(result.fun)
        if value <= 0.0:
            return 0.0, 0.0
        return float(result.x), value

    def _eval_abs(self, a):
        a = np.asarray(a, dtype=float)
        flat = a.ravel()
        uniq, inverse = np.unique(flat, return_inverse=True)
        values = np.array([self._maximizer(float(x))[1] for x in uniq])
        return values[inverse].reshape(a.shape)

    def _derivative_abs(self, a):
        a = np.asarray(a, dtype=float)
        flat = a.ravel()
        # envolvente: (N*)'(s) es el maximizador r*(s)
        return np.array([self._maximizer(float(x))[0] for x in flat]).reshape(a.shape)


def _delta2_constant(N: YoungFunction, finite_measure: bool) -> float:
    if isinstance(N, PowerSum):
        return float(2.0 ** N.exponents.max())
    lo, hi = config.DELTA2_S_RANGE
    hi = min(hi, N.domain_max / 2.0)
    if hi <= lo:
        raise Delta2Error("la tabla es demasiado corta para certificar Δ₂")
    s = np.minimum(np.logspace(np.log10(lo), np.log10(hi), config.S_GRID_POINTS), hi)
    ratio = N(2 * s) / (N(s) + float(finite_measure))
    # la razón debe saturarse en el extremo superior del rango
    top, half = ratio[-1], float(N(2 * s[-1] / 2) / (N(s[-1] / 2) + float(finite_measure)))
    if top > config.DELTA2_SATURATION * half:
        raise Delta2Error(
            f"la razón N(2s)/N(s) no se satura (crece de {half:.3g} a {top:.3g})")
    return float(max(ratio.max(), 2.0))


def _delta2_exponent(N: YoungFunction, finite_measure: bool) -> float:
    C = N.delta2_constant(finite_measure)
    q = max(2.0 * math.log2(C), 2.0 + 1e-9)
    lo, hi = config.DELTA2_S_RANGE
    # en una tabla s se limita como en la constante; los r·s fuera de rango se enmascaran
    hi = min(hi, N.domain_max / 2.0)
    r = 2.0 ** np.linspace(1.0, config.DELTA2_R_MAX_EXPONENT, 4 * config.DELTA2_R_MAX_EXPONENT)
    s = np.minimum(np.logspace(np.log10(lo), np.log10(hi), config.S_GRID_POINTS), hi)
    rr, ss = np.meshgrid(r, s, indexing="ij")
    inside = rr * ss <= N.domain_max
    lhs = N(np.where(inside, rr * ss, 0.0))
    rhs = rr ** q * (N(ss) + 2.0 * float(finite_measure))
    bad = inside & (lhs > rhs * (1 + config.NUMERIC_TOL))
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise Delta2Error(f"N(rs) > r^q(N(s)+2) en r={r[i]:.4g}, s={s[j]:.4g} con q={q:.4g}")
    logger.debug("Δ₂ certificado: C=%.6g q=%.6g", C, q)
    return q


def delta2_constant(N: YoungFunction, finite_measure: bool = True) -> float:
    """Constante C con N(2s) ≤ C·(N(s) + 1_fin) en la rejilla de muestreo."""
    return N.delta2_constant(finite_measure)


def delta2_exponent(N: YoungFunction, finite_measure: bool = True) -> float:
    """Exponente q > 2 con N(rs) ≤ r^q (N(s) + 2·1_fin) para r ≥ 2, verificado en rejilla."""
    return N.delta2_exponent(finite_measure)


def dual_delta2_factor(N: PowerSum) -> float:
    """Factor θ^{r+1} con θ = 2^{1/r}, r = min r_i, que acota N*(2s)/N*(s)."""
    r = float(N.exponents.min()) - 1.0
    theta = 2.0 ** (1.0 / r)
    return theta ** (r + 1.0)


def luxemburg_norm(f, N: YoungFunction, m: DiscreteMeasure) -> float:
    """‖f‖_{L_N} = inf{λ > 0 : m(N(f/λ)) ≤ 1}, devuelto del lado de la bola unidad."""
    a = np.abs(np.asarray(f, dtype=float))
    peak = float(a.max()) if a.size else 0.0
    if peak == 0.0:
        return 0.0

    def excess(lam: float) -> float:
        return float(m(N(a / lam))) - 1.0

    lam_min = peak / N.domain_max
    hi = max(peak, lam_min * 2.0)
    while excess(hi) > 0:
        hi *= 2.0
    if excess(hi) == 0.0:
        return float(hi)
    lo = hi / 2.0
    while excess(lo) <= 0:
        lo /= 2.0
        if lo <= lam_min:
            raise TableRangeError("la bola unidad queda fuera del rango de la tabla")
    lam = brentq(excess, lo, hi, xtol=hi * 1e-15, rtol=config.LUXEMBURG_RTOL / 10)
    while excess(lam) > 0:
        lam *= 1.0 + config.LUXEMBURG_RTOL / 10
    return float(lam)


def orlicz_holder(f, g, N: YoungFunction, m: DiscreteMeasure) -> Tuple[float, float]:
    """Devuelve (m(|fg|), 2‖f‖_N‖g‖_{N*}) y exige la desigualdad de Hölder."""
    lhs = float(m(np.abs(np.asarray(f, dtype=float) * np.asarray(g, dtype=float))))
    bound = 2.0 * luxemburg_norm(f, N, m) * luxemburg_norm(g, N.dual(), m)
    if lhs > bound * (1 + config.NUMERIC_TOL):
        raise AssertionError(f"Hölder de Orlicz violada: {lhs:.6g} > {bound:.6g}")
    return lhs, bound


def young_inequality_gap(N: YoungFunction, s1, s2):
    """N(s1) + N*(s2) − s1·s2 (no negativo por la desigualdad de Young)."""
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    return N(s1) + N.dual()(s2) - s1 * s2


def embedding_bound(f, N: YoungFunction, m: DiscreteMeasure, q: float) -> float:
    """Cota de ‖f‖_{L_N} por las normas de L¹ y L^q (inclusión continua L¹∩L^q ⊂ L_N)."""
    a = np.abs(np.asarray(f, dtype=float))
    ratio_sup = float(N(2.0)) / 2.0
    return float((2.0 * m(a ** q) * (float(N(1.0)) + 2.0)) ** (1.0 / q)
                 + 2.0 * m(a) * ratio_sup)


def eval_young(N: YoungFunction, s):
    return N(s)


def dual_eval(N: YoungFunction, s):
    return N.dual()(s)
