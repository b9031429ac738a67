"""Esquema de los experimentos: dataclasses congeladas validadas desde JSON.

Las claves desconocidas y los tipos incorrectos son errores (ConfigError con
la ruta punteada de la clave). `build_*` convierte cada sección en los objetos
del núcleo numérico y traduce sus errores de validación a ConfigError.
"""

import json
import os
from dataclasses import MISSING, asdict, dataclass, field, fields, is_dataclass
from typing import Any, Dict, Optional, Tuple, Union, get_args, get_origin, get_type_hints

import numpy as np

import config
from utils.drift import DriftSpec, Modulation, PhiSpec, PsiSpec
from utils.exceptions import ConfigError, SimulacionError
from utils.galerkin import StepperConfig
from utils.noise import MultFactor, NoiseSpec
from utils.triple import Field, SpectralDomain, bump_field, eigenmode_field, random_field

INITIAL_SHAPES = ("bump", "eigenmode", "random", "zero")


@dataclass(frozen=True)
class DomainConfig:
    n_grid: int
    alpha: float = 1.0


@dataclass(frozen=True)
class ModulationConfig:
    a0: float = 1.0
    a1: float = 0.0
    period: float = 1.0


@dataclass(frozen=True)
class PsiConfig:
    kind: str = "power"
    terms: Tuple[Tuple[float, float], ...] = ((1.0, 1.0),)
    theta: float = 2.0
    log_r: float = 1.0
    modulation: ModulationConfig = field(default_factory=ModulationConfig)


@dataclass(frozen=True)
class PhiConfig:
    h: ModulationConfig = field(default_factory=lambda: ModulationConfig(0.0, 0.0))
    phi0_terms: Tuple[Tuple[float, float], ...] = ()
    # Si se da, Φ₀ = κ·s con κ elegido para cumplir (Φ1)-(Φ2) con este ε
    compliant_eps: Optional[float] = None


@dataclass(frozen=True)
class DriftConfig:
    mode: str = "A1"
    psi: PsiConfig = field(default_factory=PsiConfig)
    phi: PhiConfig = field(default_factory=PhiConfig)
    f_const: float = 0.0
    g_const: float = 0.0
    c_psi: Optional[float] = None
    c_mono: Optional[float] = None
    c1: Optional[float] = None
    c2: float = 1.0
    c3: Optional[float] = None
    finite_measure: bool = True


@dataclass(frozen=True)
class MultConfig:
    rho_min: float = 1.0
    rho_max: float = 1.0
    kappa: float = 0.0


@dataclass(frozen=True)
class NoiseConfig:
    sigma0: float = 0.0
    beta: float = 1.0
    n_modes: int = 1
    mult: MultConfig = field(default_factory=MultConfig)


@dataclass(frozen=True)
class StepperSection:
    dt: float
    T: float
    n_modes: int
    scheme: str = "explicit"
    record_ito: bool = False
    implicit_tol: float = config.DEFAULT_IMPLICIT_TOL
    implicit_max_iter: int = config.DEFAULT_IMPLICIT_MAX_ITER


@dataclass(frozen=True)
class RunConfig:
    ensemble_size: int = 2
    master_seed: Optional[int] = None
    save_every: int = 1


@dataclass(frozen=True)
class InitialConfig:
    shape: str = "bump"
    center: float = 0.5
    width: float = 0.25
    amplitude: float = 1.0
    k: int = 1
    gamma: float = config.FIELD_DECAY
    seed: int = 0


@dataclass(frozen=True)
class VerifyConfig:
    eps: float = 1e-6
    refinement_levels: int = 3
    observable: str = "h_coord_1"
    declared_c: Optional[float] = None
    energy_c2_factor: float = 1.0
    check_times: Tuple[float, ...] = ()
    n_check_modes: Optional[int] = None
    check_samples: int = config.CHECK_SAMPLES


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainConfig
    stepper: StepperSection
    drift: DriftConfig = field(default_factory=DriftConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    run: RunConfig = field(default_factory=RunConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    initial_alt: Optional[InitialConfig] = None
    verify: VerifyConfig = field(default_factory=VerifyConfig)


# ---------------------------------------------------------------------------
# Lectura estricta


def _expect(ok: bool, path: str, what: str, value: Any) -> None:
    if not ok:
        raise ConfigError(path, f"se esperaba {what}, se recibió {json.dumps(value)}")


def _coerce(value: Any, tp: Any, path: str) -> Any:
    origin = get_origin(tp)
    if origin is Union:
        inner = [a for a in get_args(tp) if a is not type(None)]
        return None if value is None else _coerce(value, inner[0], path)
    if is_dataclass(tp):
        return _parse(tp, value, path)
    if origin is tuple:
        _expect(isinstance(value, list), path, "una lista", value)
        args = get_args(tp)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(v, args[0], f"{path}[{i}]") for i, v in enumerate(value))
        _expect(len(value) == len(args), path, f"una lista de {len(args)} elementos", value)
        return tuple(_coerce(v, a, f"{path}[{i}]") for i, (v, a) in enumerate(zip(value, args)))
    if tp is bool:
        _expect(isinstance(value, bool), path, "un booleano", value)
        return value
    if tp is int:
        _expect(isinstance(value, int) and not isinstance(value, bool), path, "un entero", value)
        return value
    if tp is float:
        _expect(isinstance(value, (int, float)) and not isinstance(value, bool), path, "un número", value)
        return float(value)
    if tp is str:
        _expect(isinstance(value, str), path, "una cadena", value)
        return value
    raise ConfigError(path, f"tipo no soportado {tp}")


def _parse(cls, data: Any, path: str):
    where = path or "<raíz>"
    _expect(isinstance(data, dict), where, "un objeto", data)
    hints = get_type_hints(cls)
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}.{key}" if path else key, "clave desconocida")
    kwargs = {}
    for name, f in known.items():
        key_path = f"{path}.{name}" if path else name
        if name in data:
            kwargs[name] = _coerce(data[name], hints[name], key_path)
    missing = [n for n, f in known.items() if n not in kwargs and _required(f)]
    if missing:
        raise ConfigError(f"{path}.{missing[0]}" if path else missing[0], "clave obligatoria ausente")
    return cls(**kwargs)


def _required(f) -> bool:
    return f.default is MISSING and f.default_factory is MISSING


def parse_config(data: Dict[str, Any]) -> ExperimentConfig:
    """Diccionario JSON → ExperimentConfig validada de extremo a extremo."""
    cfg = _parse(ExperimentConfig, data, "")
    validate(cfg)
    return cfg


def loads(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("<json>", f"JSON inválido: {e.msg} (línea {e.lineno})") from e
    return parse_config(data)


def dumps(cfg: ExperimentConfig) -> str:
    """Forma canónica (claves ordenadas) usada para el hash del manifiesto."""
    return json.dumps(asdict(cfg), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Construcción de objetos del núcleo


def _wrap(path: str, build, *args):
    try:
        return build(*args)
    except ConfigError:
        raise
    except SimulacionError as e:
        raise ConfigError(path, str(e)) from e


def _modulation(m: ModulationConfig) -> Modulation:
    return Modulation(m.a0, m.a1, m.period)


def build_domain(cfg: ExperimentConfig) -> SpectralDomain:
    return _wrap("domain", SpectralDomain, cfg.domain.n_grid, cfg.domain.alpha)


def build_drift(cfg: ExperimentConfig, dom: Optional[SpectralDomain] = None) -> DriftSpec:
    d = cfg.drift

    def make() -> DriftSpec:
        psi = _wrap("drift.psi", lambda: PsiSpec(d.psi.terms, d.psi.kind, d.psi.theta, d.psi.log_r,
                                                  _modulation(d.psi.modulation)))
        h = _wrap("drift.phi.h", _modulation, d.phi.h)
        if d.phi.compliant_eps is not None:
            if d.phi.phi0_terms:
                raise ConfigError("drift.phi.compliant_eps", "incompatible con phi0_terms")
            phi = PhiSpec.compliant(psi, dom or build_domain(cfg), d.phi.compliant_eps, h)
        else:
            phi = _wrap("drift.phi", PhiSpec, h, d.phi.phi0_terms)
        return DriftSpec(psi=psi, phi=phi, mode=d.mode, f_const=d.f_const, g_const=d.g_const,
                         c_psi=d.c_psi, c_mono=d.c_mono, c1=d.c1, c2=d.c2, c3=d.c3,
                         finite_measure=d.finite_measure)
    return _wrap("drift", make)


def build_noise(cfg: ExperimentConfig) -> NoiseSpec:
    n = cfg.noise
    mult = _wrap("noise.mult", MultFactor, n.mult.rho_min, n.mult.rho_max, n.mult.kappa)
    if n.n_modes < 1:
        raise ConfigError("noise.n_modes", "debe ser ≥ 1")
    return _wrap("noise", NoiseSpec.from_decay, n.sigma0, n.beta, n.n_modes, mult)


def build_stepper(cfg: ExperimentConfig, record_ito: Optional[bool] = None) -> StepperConfig:
    s = cfg.stepper
    record = s.record_ito if record_ito is None else record_ito
    return _wrap("stepper", lambda: StepperConfig(dt=s.dt, T=s.T, n_modes=s.n_modes, scheme=s.scheme,
                                                  implicit_tol=s.implicit_tol,
                                                  implicit_max_iter=s.implicit_max_iter,
                                                  record_ito=record, save_every=cfg.run.save_every))


def build_initial(dom: SpectralDomain, init: InitialConfig, path: str = "initial") -> Field:
    if init.shape not in INITIAL_SHAPES:
        raise ConfigError(f"{path}.shape", f"forma desconocida, opciones: {', '.join(INITIAL_SHAPES)}")
    if init.shape == "bump":
        if not init.width > 0:
            raise ConfigError(f"{path}.width", "debe ser positivo")
        return bump_field(dom, init.center, init.width, init.amplitude)
    if init.shape == "eigenmode":
        return _wrap(f"{path}.k", eigenmode_field, dom, init.k, init.amplitude)
    if init.shape == "random":
        rng = np.random.default_rng(init.seed)
        return random_field(dom, rng, init.gamma, init.amplitude)
    return dom.zeros()


def resolve_seed(cfg: ExperimentConfig, flag: Optional[int] = None) -> int:
    """--seed > run.master_seed > $SPME_SEED > 0."""
    if flag is not None:
        return int(flag)
    if cfg.run.master_seed is not None:
        return int(cfg.run.master_seed)
    env = os.environ.get(config.SEED_ENV_VAR)
    if env:
        try:
            return int(env)
        except ValueError as e:
            raise ConfigError(config.SEED_ENV_VAR, f"semilla no entera: {env!r}") from e
    return 0


def validate(cfg: ExperimentConfig) -> None:
    """Construye todos los objetos del núcleo para detectar errores antes de simular."""
    dom = build_domain(cfg)
    build_drift(cfg, dom)
    noise = build_noise(cfg)
    stepper = build_stepper(cfg)
    if stepper.n_modes > dom.n_grid:
        raise ConfigError("stepper.n_modes", f"supera domain.n_grid={dom.n_grid}")
    if noise.n_modes > dom.n_grid:
        raise ConfigError("noise.n_modes", f"supera domain.n_grid={dom.n_grid}")
    if cfg.run.ensemble_size < 1:
        raise ConfigError("run.ensemble_size", "debe ser ≥ 1")
    if cfg.run.master_seed is not None and cfg.run.master_seed < 0:
        raise ConfigError("run.master_seed", "debe ser no negativa")
    build_initial(dom, cfg.initial, "initial")
    if cfg.initial_alt is not None:
        build_initial(dom, cfg.initial_alt, "initial_alt")
    v = cfg.verify
    if not v.eps > 0:
        raise ConfigError("verify.eps", "debe ser positivo")
    if v.refinement_levels < 1:
        raise ConfigError("verify.refinement_levels", "debe ser ≥ 1")
    if v.energy_c2_factor < 0:
        raise ConfigError("verify.energy_c2_factor", "debe ser no negativo")
