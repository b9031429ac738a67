"""No linealidades Ψ, Φ, deriva ensamblada A(t,v) = LΨ(t,v) + Φ̄(t,v) y
certificados numéricos de las condiciones (A1), (A2), (K), (H1)-(H4).

Los certificados son muestrales: no demuestran nada, pero señalan la primera
muestra que viola cada desigualdad.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import config
from utils.exceptions import (Delta2Error, PreconditionError, UnsupportedSchemeError,
                              ValidationError)
from utils.noise import NoiseSpec, hs0_sq
from utils.orlicz import (LogPower, PowerSum, YoungFunction, delta2_constant,
                          delta2_exponent, dual_delta2_factor)
from utils.triple import (Field, SpectralDomain, apply_Linv, h_inner, pairing_vstar_v,
                          random_field)

logger = logging.getLogger(__name__)

MODES = ("A1", "A2")


@dataclass(frozen=True)
class Modulation:
    """a(t) = a0 + a1·sin(2πt/period), acotada entre a0 − |a1| y a0 + |a1|."""

    a0: float = 1.0
    a1: float = 0.0
    period: float = 1.0

    def __post_init__(self):
        if self.period <= 0:
            raise ValidationError("el periodo de la modulación debe ser positivo")

    def __call__(self, t: float) -> float:
        if self.a1 == 0.0:
            return self.a0
        return self.a0 + self.a1 * float(np.sin(2.0 * np.pi * t / self.period))

    @property
    def is_constant(self) -> bool:
        return self.a1 == 0.0

    @property
    def lower(self) -> float:
        return self.a0 - abs(self.a1)

    @property
    def upper(self) -> float:
        return self.a0 + abs(self.a1)

    @property
    def sup_abs(self) -> float:
        return abs(self.a0) + abs(self.a1)


@dataclass(frozen=True, eq=False)
class PsiSpec:
    """Ψ(t,s) = a(t)·Ψ₀(s).

    kind="power":    Ψ₀(s) = sign(s) Σ δ_i |s|^{r_i}  (terms = ((δ_i, r_i), ...))
    kind="logpower": Ψ₀(s) = sign(s) |s|^{θ−1} (log(1+|s|))^r
    Los δ_i pueden tener signo para construir contraejemplos; sin términos Ψ ≡ 0.
    """

    terms: Tuple[Tuple[float, float], ...] = ((1.0, 1.0),)
    kind: str = "power"
    theta: float = 2.0
    log_r: float = 1.0
    modulation: Modulation = field(default_factory=Modulation)

    def __post_init__(self):
        if self.kind not in ("power", "logpower"):
            raise ValidationError(f"tipo de Ψ desconocido: {self.kind}")
        terms = tuple((float(d), float(r)) for d, r in self.terms)
        if any(r <= 0 for _, r in terms):
            raise ValidationError("los exponentes r_i de Ψ deben ser positivos")
        if self.kind == "logpower" and (self.theta <= 1 or self.log_r < 1):
            raise ValidationError("Ψ logarítmica requiere θ > 1 y r ≥ 1")
        if self.modulation.lower <= 0:
            raise ValidationError("la modulación de Ψ debe estar acotada inferiormente por un positivo")
        object.__setattr__(self, "terms", terms)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([d for d, _ in self.terms])

    @property
    def exponents(self) -> np.ndarray:
        return np.array([r for _, r in self.terms])

    @property
    def is_zero(self) -> bool:
        return self.kind == "power" and not any(d != 0.0 for d, _ in self.terms)

    @property
    def is_monotone_form(self) -> bool:
        return self.kind == "logpower" or (not self.is_zero and bool(np.all(self.deltas > 0)))

    @property
    def is_linear(self) -> bool:
        return self.kind == "power" and len(self.terms) == 1 and self.terms[0][1] == 1.0

    def base(self, s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        if self.kind == "logpower":
            return np.sign(s) * a ** (self.theta - 1.0) * np.log1p(a) ** self.log_r
        out = np.zeros_like(s)
        for d, r in self.terms:
            out = out + d * a ** r
        return np.sign(s) * out

    def base_derivative(self, s):
        a = np.abs(np.asarray(s, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "logpower":
                log = np.log1p(a)
                out = ((self.theta - 1.0) * a ** (self.theta - 2.0) * log ** self.log_r
                       + a ** (self.theta - 1.0) * self.log_r * log ** (self.log_r - 1.0) / (1.0 + a))
                # |s|^{θ−2+r} → 0 en el origen porque θ > 1 y r ≥ 1
                return np.where(a == 0.0, 0.0, out)
            out = np.zeros_like(a)
            for d, r in self.terms:
                out = out + d * r * a ** (r - 1.0)
        return out

    def __call__(self, t: float, s):
        return self.modulation(t) * self.base(s)

    def derivative(self, t: float, s):
        return self.modulation(t) * self.base_derivative(s)

    @cached_property
    def young_function(self) -> Optional[YoungFunction]:
        """N = a_min·sΨ₀(s); None si Ψ ≡ 0."""
        if self.is_zero:
            return None
        a_min = self.modulation.lower
        if self.kind == "logpower":
            return LogPower(self.theta, self.log_r, scale=a_min)
        live = [(abs(d), r) for d, r in self.terms if d != 0.0]
        return PowerSum([a_min * d for d, _ in live], [r + 1.0 for _, r in live])


@dataclass(frozen=True, eq=False)
class PhiSpec:
    """Φ(t,s) = h_t·s + Φ₀(s) con Φ₀(s) = Σ ε̃_i sign(s)|s|^{r_i}."""

    h: Modulation = field(default_factory=lambda: Modulation(0.0, 0.0))
    phi0_terms: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        terms = tuple((float(c), float(r)) for c, r in self.phi0_terms)
        if any(r <= 0 for _, r in terms):
            raise ValidationError("los exponentes de Φ₀ deben ser positivos")
        object.__setattr__(self, "phi0_terms", terms)

    @property
    def has_phi0(self) -> bool:
        return any(c != 0.0 for c, _ in self.phi0_terms)

    @property
    def h_sup(self) -> float:
        return self.h.sup_abs

    def phi0(self, s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        out = np.zeros_like(s)
        for c, r in self.phi0_terms:
            out = out + c * a ** r
        return np.sign(s) * out

    def __call__(self, t: float, s):
        return self.h(t) * np.asarray(s, dtype=float) + self.phi0(s)

    @classmethod
    def compliant(cls, psi: PsiSpec, dom: SpectralDomain, eps: float = 0.5,
                  h: Optional[Modulation] = None) -> "PhiSpec":
        """Φ₀(s) = κ·s con κ = ε·‖L⁻¹‖⁻¹_{L²}·ε_1 tomado del término r = 1 de Ψ.

        Sin término lineal en Ψ la condición de Lipschitz de Φ₀ sólo admite Φ₀ ≡ 0.
        """
        h = h or Modulation(0.0, 0.0)
        linear = [d for d, r in psi.terms if r == 1.0 and d > 0]
        if not linear:
            logger.info("Ψ sin término lineal: se usa Φ₀ ≡ 0")
            return cls(h=h)
        kappa = eps * linear[0] * psi.modulation.lower / linv_operator_norm(dom, 2.0)
        return cls(h=h, phi0_terms=((kappa, 1.0),))


@dataclass(frozen=True, eq=False)
class DriftSpec:
    """Ψ, Φ, constantes f, g y constantes declaradas de (Ψ3), (H2)-(H4).

    Una constante declarada None sólo se informa; si tiene valor, el
    certificado correspondiente falla cuando la estimación empírica la supera.
    """

    psi: PsiSpec = field(default_factory=PsiSpec)
    phi: PhiSpec = field(default_factory=PhiSpec)
    mode: str = "A1"
    f_const: float = 0.0
    g_const: float = 0.0
    c_psi: Optional[float] = None
    c_mono: Optional[float] = None
    c1: Optional[float] = None
    c2: float = 1.0
    c3: Optional[float] = None
    finite_measure: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"modo desconocido: {self.mode}")
        if self.f_const < 0 or self.g_const < 0 or self.c2 < 0:
            raise ValidationError("f, g y c2 deben ser no negativos")
        if self.mode == "A1" and self.phi.has_phi0:
            raise ValidationError("en modo A1 Φ debe ser h_t·s (Φ₀ ≡ 0)")
        if self.mode == "A2":
            if self.psi.kind != "power" or not self.psi.is_monotone_form:
                raise ValidationError("el modo A2 requiere Ψ de tipo suma de potencias con δ_i > 0")
            if np.any(self.psi.exponents < 1.0):
                raise UnsupportedSchemeError("el modo A2 con exponentes r_i < 1 no está soportado")

    @property
    def is_linear(self) -> bool:
        """Ψ(s) = δ·s sin modulación, h ≡ 0 y Φ₀ ≡ 0."""
        return (self.psi.is_linear and self.psi.modulation.is_constant
                and self.phi.h_sup == 0.0 and not self.phi.has_phi0)

    @property
    def linear_rate(self) -> float:
        """Coeficiente κ con Ψ(s) = κ·s en el caso lineal."""
        if not self.is_linear:
            raise PreconditionError("la deriva no es lineal")
        return self.psi.modulation.a0 * self.psi.terms[0][0]


def psi_eval(spec: DriftSpec, t: float, s):
    return spec.psi(t, s)


def phi_eval(spec: DriftSpec, t: float, s):
    return spec.phi(t, s)


def drift_coefficients(dom: SpectralDomain, spec: DriftSpec, t: float, values: np.ndarray) -> np.ndarray:
    """Coeficientes Â = −λ·(Ψ(t,X))̂ + h_t·X̂ + (Φ₀(X))̂ para un lote (..., n_grid)."""
    values = np.asarray(values, dtype=float)
    coefs = -dom.eigenvalues * dom.to_spectral(spec.psi(t, values))
    h_t = spec.phi.h(t)
    if h_t != 0.0:
        coefs = coefs + h_t * dom.to_spectral(values)
    if spec.phi.has_phi0:
        coefs = coefs + dom.to_spectral(spec.phi.phi0(values))
    return coefs


def assemble_A(dom: SpectralDomain, spec: DriftSpec, t: float, X: Field) -> Field:
    return dom.field_from_spectral(drift_coefficients(dom, spec, t, X.values))


def pairing_A(dom: SpectralDomain, spec: DriftSpec, t: float, X: Field, u: Field) -> float:
    """⟨A(t,X), u⟩_{V*,V} = −m(Ψ(t,X)u) + h_t⟨X,u⟩_H − m(Φ₀(X)·L⁻¹u)."""
    return float(_pairing_batch(dom, spec, t, X.values[None, :], u)[0])


def _pairing_batch(dom: SpectralDomain, spec: DriftSpec, t: float,
                   values: np.ndarray, u: Field) -> np.ndarray:
    out = -dom.measure(spec.psi(t, values) * u.values)
    h_t = spec.phi.h(t)
    if h_t != 0.0:
        out = out + h_t * dom.h_inner_coefs(dom.to_spectral(values), u.coefficients)
    if spec.phi.has_phi0:
        out = out - dom.measure(spec.phi.phi0(values) * apply_Linv(dom, u).values)
    return out


def galerkin_coordinates(dom: SpectralDomain, spec: DriftSpec, t: float, X: Field,
                         n_modes: int) -> np.ndarray:
    """⟨A(t,X), ê_j⟩_{V*,V} para j = 1..n_modes con ê_j = √λ_j s_j, por la vía del emparejamiento."""
    psi = dom.field(spec.psi(t, X.values))
    phi0 = spec.phi.phi0(X.values)
    h_t = spec.phi.h(t)
    coords = np.empty(n_modes)
    for j in range(1, n_modes + 1):
        e_j = dom.h_orthonormal_field(j)
        coords[j - 1] = (pairing_vstar_v(dom, psi, e_j)
                         + h_t * h_inner(dom, X, e_j)
                         - float(dom.measure(phi0 * apply_Linv(dom, e_j).values)))
    return coords


@lru_cache(maxsize=64)
def linv_operator_norm(dom: SpectralDomain, p: float, n_samples: int = config.LINV_SAMPLES,
                       seed: int = config.LINV_SEED) -> float:
    """Cota empírica inflada de ‖L⁻¹‖ como operador de L^p(m)."""
    rng = np.random.default_rng(seed)

    def lp(v: np.ndarray) -> float:
        return float(dom.measure(np.abs(v) ** p)) ** (1.0 / p)

    candidates = [dom.basis_field(1)]
    candidates += [random_field(dom, rng, decay=config.FIELD_DECAY) for _ in range(n_samples)]
    best = 0.0
    for w in candidates:
        for _ in range(3):
            v = apply_Linv(dom, w)
            best = max(best, lp(v.values) / lp(w.values))
            w = v * (1.0 / lp(v.values))
    logger.debug("‖L⁻¹‖_{L^%g} ≈ %.6g (sin inflar)", p, best)
    return best * config.LINV_INFLATION


def R(dom: SpectralDomain, spec: DriftSpec, X: Field) -> float:
    """R(v) = m(N(v)) + ‖v‖²_H."""
    return float(R_values(dom, spec.psi.young_function, X.values[None, :])[0])


def R_values(dom: SpectralDomain, N: Optional[YoungFunction], values: np.ndarray) -> np.ndarray:
    coefs = dom.to_spectral(values)
    out = dom.h_inner_coefs(coefs, coefs)
    if N is not None:
        out = out + dom.measure(N(values))
    return out


# ---------------------------------------------------------------------------
# Certificados


@dataclass
class ConditionReport:
    """Constantes y márgenes en el peor caso (margen < 0: desigualdad violada)."""

    condition: str
    n_samples: int = 0
    constants: Dict[str, float] = field(default_factory=dict)
    margins: Dict[str, float] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {"condition": self.condition, "passed": self.passed,
                                  "n_samples": self.n_samples}
        record.update({f"const_{k}": v for k, v in self.constants.items()})
        record.update({f"margin_{k}": v for k, v in self.margins.items()})
        record["failures"] = " | ".join(self.failures)
        return record

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([self.to_record()])

    def summary_line(self) -> str:
        consts = " ".join(f"{k}={v:.6g}" for k, v in self.constants.items())
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.condition} {consts} n={self.n_samples}".rstrip()


class HReport(ConditionReport):
    """Informe de (H1)-(H4) con acceso directo a las constantes empíricas."""

    @property
    def c(self) -> float:
        return self.constants["c_H2"]

    @property
    def c1(self) -> float:
        return self.constants["c1"]

    @property
    def c2(self) -> float:
        return self.constants["c2"]

    @property
    def f(self) -> float:
        return self.constants["f"]

    @property
    def c3(self) -> float:
        return self.constants["c3"]


class _Certificate:
    def __init__(self, report: ConditionReport):
        self.report = report

    def record(self, name: str, margins, describe: Callable[[int], str]) -> float:
        margins = np.asarray(margins, dtype=float).ravel()
        if margins.size == 0:
            margins = np.zeros(1)
        margins = np.where(np.isnan(margins), -np.inf, margins)
        idx = int(np.argmin(margins))
        worst = float(margins[idx])
        self.report.margins[name] = worst
        if worst < -config.NUMERIC_TOL:
            self.report.failures.append(f"{name}: margen {worst:.3e} en {describe(idx)}")
        return worst

    def fail(self, name: str, message: str) -> None:
        self.report.margins[name] = -np.inf
        self.report.failures.append(f"{name}: {message}")


def _rel(rhs, lhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    lhs = np.asarray(lhs, dtype=float)
    with np.errstate(invalid="ignore"):
        return (rhs - lhs) / (1.0 + np.abs(rhs) + np.abs(lhs))


def signed_grid(sample_grid: Optional[Sequence[float]] = None) -> np.ndarray:
    """Rejilla simétrica {−s} ∪ {0} ∪ {s} a partir de una rejilla positiva."""
    if sample_grid is None:
        sample_grid = np.logspace(np.log10(config.S_GRID_MIN), np.log10(config.S_GRID_MAX),
                                  config.S_GRID_POINTS)
    s = np.unique(np.abs(np.asarray(sample_grid, dtype=float)))
    s = s[s > 0]
    return np.concatenate((-s[::-1], [0.0], s))


def _time_samples(spec: DriftSpec) -> np.ndarray:
    times = [0.0]
    for mod in (spec.psi.modulation, spec.phi.h):
        if not mod.is_constant:
            times.extend(np.linspace(0.0, mod.period, 9))
    return np.unique(times)


def _young_checks(cert: _Certificate, N: YoungFunction, finite: bool) -> None:
    try:
        N.validate()
    except ValidationError as exc:
        cert.fail("young", str(exc))
        return
    try:
        cert.report.constants["q"] = delta2_exponent(N, finite)
    except Delta2Error as exc:
        cert.fail("delta2_N", str(exc))
    try:
        if isinstance(N, PowerSum):
            cert.report.constants["C_dual"] = dual_delta2_factor(N)
        else:
            cert.report.constants["C_dual"] = delta2_constant(N.dual(), finite)
    except Delta2Error as exc:
        cert.fail("delta2_dual", str(exc))


def _pairs(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(s.size, k=1)
    return i, j


def _sandwich(cert: _Certificate, spec: DriftSpec, N: YoungFunction, s: np.ndarray,
              times: np.ndarray, names: Tuple[str, str]) -> float:
    """(Ψ2)/(Ψ3): N(s) − f ≤ sΨ(t,s) ≤ c(N(s) + f). Devuelve la c usada."""
    fin = float(spec.finite_measure)
    f = spec.f_const * fin
    n_vals = N(s)
    s_psi = np.array([s * spec.psi(t, s) for t in times])
    nz = n_vals + f > 0
    c_emp = float(np.max(s_psi[:, nz] / (n_vals[nz] + f))) if np.any(nz) else 1.0
    c = spec.c_psi if spec.c_psi is not None else max(c_emp, 1.0)
    cert.report.constants["c"] = c
    cert.report.constants["c_empirical"] = c_emp
    cert.report.constants["f"] = spec.f_const

    def where(idx: int) -> str:
        k, i = np.unravel_index(idx, s_psi.shape)
        return f"t={times[k]:.4g}, s={s[i]:.6g}"

    cert.record(names[0], _rel(s_psi, n_vals - f), where)
    cert.record(names[1], _rel(c * (n_vals + f), s_psi), where)
    return c


def _monotone_pairs(cert: _Certificate, spec: DriftSpec, s: np.ndarray, times: np.ndarray,
                    name: str, lower: Callable[[np.ndarray], np.ndarray]) -> None:
    """(s2−s1)(Ψ(t,s2)−Ψ(t,s1)) ≥ lower(|s2−s1|) sobre todos los pares de la rejilla."""
    i, j = _pairs(s)
    ds = s[j] - s[i]
    margins = []
    for t in times:
        psi = spec.psi(t, s)
        prod = ds * (psi[j] - psi[i])
        margins.append(_rel(prod, lower(np.abs(ds))))
    margins = np.array(margins)

    def where(idx: int) -> str:
        k, p = np.unravel_index(idx, margins.shape)
        return f"t={times[k]:.4g}, (s1, s2)=({s[i[p]]:.6g}, {s[j[p]]:.6g})"

    cert.record(name, margins, where)


def check_A1(spec: DriftSpec, sample_grid: Optional[Sequence[float]] = None) -> ConditionReport:
    if spec.mode != "A1":
        raise PreconditionError("check_A1 requiere una deriva en modo A1")
    N = spec.psi.young_function
    if N is None:
        raise PreconditionError("Ψ ≡ 0 no define una función de Young")
    s = signed_grid(sample_grid)
    times = _time_samples(spec)
    fin = float(spec.finite_measure)
    cert = _Certificate(ConditionReport("A1", n_samples=s.size * times.size))
    _young_checks(cert, N, spec.finite_measure)

    _monotone_pairs(cert, spec, s, times, "Psi1", lambda d: np.zeros_like(d))
    c = _sandwich(cert, spec, N, s, times, ("Psi2", "Psi3"))

    dual = N.dual()
    psi0 = np.array([float(spec.psi(t, 0.0)) for t in times])
    psi0_dual = np.asarray(dual(psi0 / c), dtype=float)
    if not np.all(np.isfinite(psi0_dual)):
        cert.fail("Psi4", "N*(Ψ(t,0)) no es finito")
    else:
        cert.report.margins["Psi4"] = 0.0

    # estimación dual puntual: N*(c⁻¹Ψ(t,s)) ≤ N(s) + [3f + N*(c⁻¹Ψ(t,0))]·1_fin
    lhs = np.array([dual(spec.psi(t, s) / c) for t in times])
    rhs = N(s)[None, :] + (3.0 * spec.f_const + psi0_dual[:, None]) * fin

    def where(idx: int) -> str:
        k, p = np.unravel_index(idx, lhs.shape)
        return f"t={times[k]:.4g}, s={s[p]:.6g}"

    cert.record("dual_estimate", _rel(rhs, lhs), where)
    logger.info("A1: %s", cert.report.summary_line())
    return cert.report


def check_A2(spec: DriftSpec, dom: SpectralDomain,
             sample_grid: Optional[Sequence[float]] = None) -> ConditionReport:
    if spec.mode != "A2":
        raise PreconditionError("check_A2 requiere una deriva en modo A2")
    psi = spec.psi
    r = psi.exponents
    if np.any(r < 1.0):
        raise UnsupportedSchemeError("(Ψ1)′ sólo se certifica con r_i ≥ 1")
    N = psi.young_function
    s = signed_grid(sample_grid)
    times = _time_samples(spec)
    cert = _Certificate(ConditionReport("A2", n_samples=s.size * times.size))
    _young_checks(cert, N, spec.finite_measure)

    eps_i = N.coeffs
    linv_inv = np.array([1.0 / linv_operator_norm(dom, ri + 1.0) for ri in r])
    delta_prime = 2.0 ** (1.0 - r) * psi.modulation.lower * psi.deltas
    for k, ri in enumerate(r):
        cert.report.constants[f"Linv_norm_{ri:g}"] = 1.0 / linv_inv[k]
        cert.report.constants[f"delta_prime_{ri:g}"] = float(delta_prime[k])

    def lower(d: np.ndarray) -> np.ndarray:
        return np.sum(delta_prime * d[:, None] ** (r + 1.0), axis=-1)

    _monotone_pairs(cert, spec, s, times, "Psi1_prime", lower)
    _sandwich(cert, spec, N, s, times, ("Psi2_prime_lower", "Psi2_prime_upper"))

    # (Φ1): |Φ₀(s2) − Φ₀(s1)| ≤ Σ δ'_i ‖L⁻¹‖⁻¹ |s2 − s1|^{r_i}
    i, j = _pairs(s)
    phi0 = spec.phi.phi0(s)
    diff = np.abs(phi0[j] - phi0[i])
    d = np.abs(s[j] - s[i])
    bound = np.sum(delta_prime * linv_inv * d[:, None] ** r, axis=-1)
    cert.record("Phi1", _rel(bound, diff),
                lambda p: f"(s1, s2)=({s[i[p]]:.6g}, {s[j[p]]:.6g})")

    # (Φ2): el ε mínimo con |Φ₀(s)| ≤ Σ ε·‖L⁻¹‖⁻¹ ε_i |s|^{r_i} debe estar en (0, 1)
    nz = s != 0
    unit = np.sum(linv_inv * eps_i * np.abs(s[nz])[:, None] ** r, axis=-1)
    eps_needed = float(np.max(np.abs(phi0[nz]) / unit))
    cert.report.constants["eps"] = eps_needed
    worst = int(np.argmax(np.abs(phi0[nz]) / unit))
    cert.record("Phi2", np.array([1.0 - eps_needed]),
                lambda _: f"s={s[nz][worst]:.6g} (ε requerido {eps_needed:.4g})")

    # estimación dual de Φ₀: N*(Φ₀(s)) ≤ c̃ N(s)
    x = eps_needed * linv_inv
    c_i = r / (r + 1.0) * (r + 1.0) ** (-1.0 / r)
    c_tilde = float(np.max(c_i * np.maximum(x, x ** ((r + 1.0) / r))))
    cert.report.constants["c_tilde"] = c_tilde
    lhs = np.asarray(N.dual()(phi0), dtype=float)
    cert.record("Phi0_dual_estimate", _rel(c_tilde * N(s), lhs),
                lambda p: f"s={s[p]:.6g}")
    logger.info("A2: %s", cert.report.summary_line())
    return cert.report


def check_K(dom: SpectralDomain, spec: DriftSpec, n_samples: int = config.CHECK_SAMPLES,
            rng: Optional[np.random.Generator] = None) -> ConditionReport:
    """R(0) = 0, R par y (K)(iii) con C = 1/2: R(x+y) ≤ (R(2x) + R(2y))/2."""
    rng = rng or np.random.default_rng(config.LINV_SEED)
    N = spec.psi.young_function
    cert = _Certificate(ConditionReport("K", n_samples=n_samples))
    cert.report.constants["C"] = 0.5
    x = np.array([random_field(dom, rng, config.FIELD_DECAY, 10 ** rng.uniform(-1, 0.5)).values
                  for _ in range(n_samples)])
    y = np.array([random_field(dom, rng, config.FIELD_DECAY, 10 ** rng.uniform(-1, 0.5)).values
                  for _ in range(n_samples)])
    r0 = float(R_values(dom, N, np.zeros((1, dom.n_grid)))[0])
    cert.record("R_zero", np.array([-abs(r0)]), lambda _: "x=0")
    rx = R_values(dom, N, x)
    cert.record("R_even", -np.abs(_rel(rx, R_values(dom, N, -x))), lambda k: f"muestra {k}")
    lhs = R_values(dom, N, x + y)
    rhs = 0.5 * (R_values(dom, N, 2 * x) + R_values(dom, N, 2 * y))
    cert.record("K_iii", _rel(rhs, lhs), lambda k: f"muestra {k}")
    return cert.report


def check_H(dom: SpectralDomain, spec: DriftSpec, noise: NoiseSpec,
            n_samples: int = config.CHECK_SAMPLES,
            rng: Optional[np.random.Generator] = None) -> HReport:
    """Estimaciones empíricas de (H1)-(H4) sobre pares aleatorios de campos."""
    rng = rng or np.random.default_rng(config.LINV_SEED)
    N = spec.psi.young_function
    fin = float(spec.finite_measure)
    hs0 = hs0_sq(noise, dom)
    rho = noise.mult
    f_h3 = 2.0 * spec.f_const * dom.measure.total_mass * fin + rho.rho_max ** 2 * hs0
    times = _time_samples(spec)
    cert = _Certificate(HReport("H", n_samples=n_samples))

    def draw() -> Field:
        return random_field(dom, rng, config.FIELD_DECAY, 10 ** rng.uniform(-1, 0.5))

    def pA(t: float, X: Field, u: Field) -> float:
        return float(_pairing_batch(dom, spec, t, X.values[None, :], u)[0])

    h2, dominance, c1_k, c3_k = [], [], [], []
    for k in range(n_samples):
        t = float(times[k % times.size])
        u, v = draw(), draw()
        diff = u - v
        d2 = h_inner(dom, diff, diff)
        nu, nv = np.sqrt(h_inner(dom, u, u)), np.sqrt(h_inner(dom, v, v))
        mono = pA(t, u, diff) - pA(t, v, diff)
        b_diff = (float(rho(nu)) - float(rho(nv))) ** 2 * hs0
        h2.append((2.0 * mono + b_diff) / d2)
        dominance.append(_rel(spec.phi.h_sup * d2, mono))

        r_u = float(R_values(dom, N, u.values[None, :])[0])
        r_v = float(R_values(dom, N, v.values[None, :])[0])
        lhs3 = 2.0 * pA(t, v, v) + float(rho(nv)) ** 2 * hs0
        c1_k.append((lhs3 + spec.c2 * r_v - f_h3) / nv ** 2)
        c3_k.append(max(abs(pA(t, v, u)) - spec.g_const, 0.0) / (r_u + r_v))

    consts = cert.report.constants
    consts["c_H2"] = float(np.max(h2))
    consts["c1"] = float(np.max(c1_k))
    consts["c2"] = spec.c2
    consts["f"] = f_h3
    consts["c3"] = float(np.max(c3_k))
    consts["g"] = spec.g_const
    consts["h_sup"] = spec.phi.h_sup

    if spec.psi.is_monotone_form and not spec.phi.has_phi0:
        cert.record("H2_h_dominance", np.array(dominance), lambda k: f"muestra {k}")
    for name, empirical, declared in (("H2", consts["c_H2"], spec.c_mono),
                                      ("H3", consts["c1"], spec.c1),
                                      ("H4", consts["c3"], spec.c3)):
        if declared is not None:
            cert.record(name, _rel(declared, empirical),
                        lambda _: f"constante empírica {empirical:.6g} > declarada {declared:.6g}")

    _hemicontinuity(cert, dom, spec, rng, min(10, n_samples), times)
    logger.info("H: %s", cert.report.summary_line())
    return cert.report


def _hemicontinuity(cert: _Certificate, dom: SpectralDomain, spec: DriftSpec,
                    rng: np.random.Generator, n_lines: int, times: np.ndarray) -> None:
    """(H1): los saltos de λ ↦ ⟨A(u+λv), x⟩ deben decrecer al refinar la rejilla en λ."""
    ratios = []
    for k in range(n_lines):
        t = float(times[k % times.size])
        u, v, x = (random_field(dom, rng, config.FIELD_DECAY) for _ in range(3))
        jumps = []
        for n_lam in (201, 401):
            lam = np.linspace(-1.0, 1.0, n_lam)
            values = u.values[None, :] + lam[:, None] * v.values[None, :]
            phi = _pairing_batch(dom, spec, t, values, x)
            jumps.append(float(np.max(np.abs(np.diff(phi)))))
        ratios.append(0.0 if jumps[0] == 0.0 else jumps[1] / jumps[0])
    ratios = np.array(ratios)
    cert.report.constants["H1_ratio"] = float(ratios.max()) if ratios.size else 0.0
    cert.record("H1", config.H1_CONTINUITY_RATIO - ratios, lambda k: f"recta {k}")
