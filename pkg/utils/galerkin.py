"""Integración temporal del sistema de Galerkin y orquestación Monte Carlo.

El motor trabaja sobre lotes de coeficientes espectrales de forma
(n_rutas, n_grid); `simulate` es el caso de una sola ruta.
"""

import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import solve_banded

import config
from utils.drift import DriftSpec, R_values, drift_coefficients
from utils.exceptions import (BlowUpError, ConvergenceError, StabilityError,
                              UnsupportedSchemeError, ValidationError)
from utils.noise import BrownianPath, NoiseSpec, diffusion_coefficients
from utils.triple import Field, SpectralDomain, project

logger = logging.getLogger(__name__)

SCHEMES = ("explicit", "semi_implicit")


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    T: float
    n_modes: int
    scheme: str = "explicit"
    implicit_tol: float = config.DEFAULT_IMPLICIT_TOL
    implicit_max_iter: int = config.DEFAULT_IMPLICIT_MAX_ITER
    record_ito: bool = False
    save_every: int = 1
    zeta: float = config.JACOBIAN_ZETA

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("dt debe ser positivo")
        if self.T < 0:
            raise ValidationError("T debe ser no negativo")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"esquema desconocido: {self.scheme}")
        if self.n_modes < 1 or self.save_every < 1:
            raise ValidationError("n_modes y save_every deben ser ≥ 1")
        if abs(round(self.T / self.dt) * self.dt - self.T) > 1e-9 * max(self.T, 1.0):
            raise ValidationError("T debe ser múltiplo entero de dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def save_indices(self) -> np.ndarray:
        return np.unique(np.append(np.arange(0, self.n_steps + 1, self.save_every), self.n_steps))


@dataclass
class Trajectory:
    """Estados guardados de una ruta y, si se pidió, los registros de Itô por paso."""

    domain: SpectralDomain
    times: np.ndarray
    coefficients: np.ndarray
    dt: float
    n_modes: int
    path_seed: Tuple[int, int] = (0, 0)
    ito_states: Optional[np.ndarray] = None
    drift_record: Optional[np.ndarray] = None
    diffusion_record: Optional[np.ndarray] = None
    increments: Optional[np.ndarray] = None

    @property
    def states(self) -> List[Field]:
        return [self.domain.field_from_spectral(c) for c in self.coefficients]

    def state(self, i: int) -> Field:
        return self.domain.field_from_spectral(self.coefficients[i])

    @property
    def has_ito_records(self) -> bool:
        return self.drift_record is not None and self.diffusion_record is not None

    def to_frame(self, observables: Sequence[str] = ("h_norm_sq", "max_norm"),
                 drift: Optional[DriftSpec] = None) -> pd.DataFrame:
        """Una fila por tiempo guardado: t, observables y coeficientes c_k."""
        data = {"t": self.times}
        for name in observables:
            data[name] = observable(name)(self.domain, drift, self.coefficients, None)
        for k in range(self.n_modes):
            data[f"c_{k + 1}"] = self.coefficients[:, k]
        return pd.DataFrame(data)


# ---------------------------------------------------------------------------
# Pasos


def _noise_term(dom: SpectralDomain, noise: NoiseSpec, coefs: np.ndarray, dW: np.ndarray,
                n_modes: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(B(X)dW en coeficientes, Z por modo, dW proyectado) para un lote."""
    k = min(noise.n_modes, n_modes)
    dW_g = np.zeros((coefs.shape[0], n_modes))
    dW_g[:, :k] = dW[:, :k]
    if noise.is_additive:
        rho = np.full(coefs.shape[0], noise.mult.rho_max)
    else:
        rho = noise.mult(np.sqrt(dom.h_inner_coefs(coefs, coefs)))
    Z = diffusion_coefficients(noise, rho, n_modes)
    b_dw = np.zeros_like(coefs)
    b_dw[:, :n_modes] = Z * dW_g
    return b_dw, Z, dW_g


def _truncate(coefs: np.ndarray, n_modes: int) -> np.ndarray:
    coefs = np.array(coefs, dtype=float)
    coefs[..., n_modes:] = 0.0
    return coefs


def _stability_hint(dom: SpectralDomain, drift: DriftSpec) -> str:
    psi = drift.psi
    fast = psi.kind == "power" and bool(np.any((psi.exponents < 1.0) & (psi.deltas != 0.0)))
    if not fast:
        return "reduzca dt" if dom.alpha != 1.0 else "reduzca dt o use el esquema semi-implícito"
    if dom.alpha != 1.0:
        return ("Ψ′(0) = ∞ con r < 1 y no hay esquema semi-implícito para alpha < 1: "
                "la difusión rápida fraccionaria no está soportada")
    return "Ψ′(0) = ∞ con r < 1: la difusión rápida requiere el esquema semi-implícito"


def _explicit(dom, drift, noise, t, coefs, dW, dt, n_modes, step):
    values = dom.from_spectral(coefs)
    if not drift.psi.is_zero:
        slope = float(np.max(drift.psi.derivative(t, values)))
        limit = dt * dom.eigenvalues[n_modes - 1] * slope
        if not limit <= config.STABILITY_LIMIT:
            raise StabilityError(
                step, f"paso {step}: dt·λ_n·sup Ψ′ = {limit:.3g} > {config.STABILITY_LIMIT}; "
                      f"{_stability_hint(dom, drift)}")
    Y = _truncate(drift_coefficients(dom, drift, t, values), n_modes)
    b_dw, Z, dW_g = _noise_term(dom, noise, coefs, dW, n_modes)
    new = coefs + dt * Y + b_dw
    if not np.all(np.isfinite(new)):
        raise BlowUpError(step)
    return new, Y, Z, dW_g


def _newton(dom: SpectralDomain, drift: DriftSpec, t: float, b: np.ndarray, u0: np.ndarray,
            dt: float, tol: float, max_iter: int, zeta: float, step: int) -> np.ndarray:
    """Newton amortiguado para u − dt·L_hΨ(t,u) = b con jacobiano tridiagonal."""
    c = dt * drift.psi.modulation(t) / dom.h ** 2
    psi, dpsi = drift.psi.base, drift.psi.base_derivative

    def residual(u: np.ndarray) -> np.ndarray:
        w = psi(u)
        lap = -2.0 * w
        lap[1:] += w[:-1]
        lap[:-1] += w[1:]
        return u - c * lap - b

    u = u0.copy()
    F = residual(u)
    for it in range(max_iter):
        res = float(np.max(np.abs(F)))
        if res <= tol:
            logger.debug("paso %d: Newton convergió en %d iteraciones", step, it)
            return u
        d = np.minimum(dpsi(u), 1.0 / zeta)
        ab = np.zeros((3, u.size))
        ab[0, 1:] = -c * d[1:]
        ab[1] = 1.0 + 2.0 * c * d
        ab[2, :-1] = -c * d[:-1]
        delta = solve_banded((1, 1), ab, -F)
        norm0 = float(np.linalg.norm(F))
        lam = 1.0
        while True:
            trial = u + lam * delta
            F_trial = residual(trial)
            if np.linalg.norm(F_trial) <= (1.0 - 1e-4 * lam) * norm0 or lam < 2.0 ** -10:
                break
            lam *= 0.5
        u, F = trial, F_trial
    res = float(np.max(np.abs(F)))
    if res <= tol:
        return u
    raise ConvergenceError(step, res)


def _semi_implicit(dom, drift, noise, t, coefs, dW, dt, n_modes, tol, max_iter, zeta, step):
    if dom.alpha != 1.0:
        raise UnsupportedSchemeError("el esquema semi-implícito requiere alpha = 1")
    values = dom.from_spectral(coefs)
    Y = _truncate(drift_coefficients(dom, drift, t, values), n_modes)
    b_dw, Z, dW_g = _noise_term(dom, noise, coefs, dW, n_modes)
    rhs = values + dom.from_spectral(b_dw)
    h_t = drift.phi.h(t)
    if h_t != 0.0:
        rhs = rhs + dt * h_t * values
    if drift.phi.has_phi0:
        rhs = rhs + dt * drift.phi.phi0(values)
    new = np.empty_like(coefs)
    for p in range(coefs.shape[0]):
        u = _newton(dom, drift, t, rhs[p], values[p], dt, tol, max_iter, zeta, step)
        new[p] = dom.to_spectral(u)
    new = _truncate(new, n_modes)
    if not np.all(np.isfinite(new)):
        raise BlowUpError(step)
    return new, Y, Z, dW_g


def step_explicit(dom: SpectralDomain, drift: DriftSpec, noise: NoiseSpec, t: float, X: Field,
                  dW: np.ndarray, dt: float, n_modes: Optional[int] = None, step: int = 1) -> Field:
    """P_n(X + dt·A(t,X) + B(X)dW)."""
    n_modes = n_modes or dom.n_grid
    new, _, _, _ = _explicit(dom, drift, noise, t, _truncate(X.coefficients, n_modes)[None, :],
                             np.atleast_2d(dW), dt, n_modes, step)
    return dom.field_from_spectral(new[0])


def step_semi_implicit(dom: SpectralDomain, drift: DriftSpec, noise: NoiseSpec, t: float, X: Field,
                       dW: np.ndarray, dt: float, n_modes: Optional[int] = None, step: int = 1,
                       tol: float = config.DEFAULT_IMPLICIT_TOL,
                       max_iter: int = config.DEFAULT_IMPLICIT_MAX_ITER,
                       zeta: float = config.JACOBIAN_ZETA) -> Field:
    """Resuelve u − dt·L_hΨ(t,u) = X + dt·[h_t X + Φ₀(X)] + B(X)dW y proyecta."""
    n_modes = n_modes or dom.n_grid
    new, _, _, _ = _semi_implicit(dom, drift, noise, t, _truncate(X.coefficients, n_modes)[None, :],
                                  np.atleast_2d(dW), dt, n_modes, tol, max_iter, zeta, step)
    return dom.field_from_spectral(new[0])


# ---------------------------------------------------------------------------
# Motor por lotes


@dataclass
class _Run:
    saved: np.ndarray
    states: Optional[np.ndarray] = None
    Y: Optional[np.ndarray] = None
    Z: Optional[np.ndarray] = None
    dW: Optional[np.ndarray] = None


class GalerkinEngine:
    """Integra lotes de rutas con incrementos brownianos dados."""

    def __init__(self, cfg: StepperConfig, dom: SpectralDomain, drift: DriftSpec, noise: NoiseSpec):
        if cfg.n_modes > dom.n_grid:
            raise ValidationError(f"n_modes={cfg.n_modes} supera n_grid={dom.n_grid}")
        noise.check_domain(dom)
        self.cfg, self.dom, self.drift, self.noise = cfg, dom, drift, noise
        self.scheme = cfg.scheme
        if self.scheme == "semi_implicit" and dom.alpha != 1.0:
            logger.warning("alpha=%g: el esquema semi-implícito no está disponible, se usa el explícito",
                           dom.alpha)
            self.scheme = "explicit"

    def _step(self, t, coefs, dW, step):
        cfg = self.cfg
        if self.scheme == "explicit":
            return _explicit(self.dom, self.drift, self.noise, t, coefs, dW, cfg.dt, cfg.n_modes, step)
        return _semi_implicit(self.dom, self.drift, self.noise, t, coefs, dW, cfg.dt, cfg.n_modes,
                              cfg.implicit_tol, cfg.implicit_max_iter, cfg.zeta, step)

    def integrate(self, coefs0: np.ndarray, dW: np.ndarray, record: bool = False) -> _Run:
        """coefs0: (P, n_grid); dW: (P, n_steps, n_ruido)."""
        cfg = self.cfg
        P, n = coefs0.shape[0], cfg.n_steps
        save_idx = cfg.save_indices
        run = _Run(saved=np.empty((P, save_idx.size, self.dom.n_grid)))
        coefs = _truncate(coefs0, cfg.n_modes)
        run.saved[:, 0] = coefs
        if record:
            run.states = np.empty((P, n + 1, self.dom.n_grid))
            run.states[:, 0] = coefs
            run.Y = np.empty((P, n, self.dom.n_grid))
            run.Z = np.empty((P, n, cfg.n_modes))
            run.dW = np.empty((P, n, cfg.n_modes))
        slot = 1
        for k in range(n):
            coefs, Y, Z, dW_g = self._step(k * cfg.dt, coefs, dW[:, k], k + 1)
            if record:
                run.states[:, k + 1] = coefs
                run.Y[:, k], run.Z[:, k], run.dW[:, k] = Y, Z, dW_g
            if slot < save_idx.size and save_idx[slot] == k + 1:
                run.saved[:, slot] = coefs
                slot += 1
        return run

    def increments(self, master_seed: int, path_indices: Sequence[int], level: int = 0) -> np.ndarray:
        n_root, rem = divmod(self.cfg.n_steps, 2 ** level)
        if rem:
            raise ValidationError("el número de pasos debe ser divisible por 2^nivel")
        dt_root = self.cfg.dt * 2 ** level
        return np.array([BrownianPath(master_seed, p, self.noise.n_modes, dt_root, level).increments(n_root)
                         for p in path_indices]).reshape(len(path_indices), self.cfg.n_steps,
                                                          self.noise.n_modes)

    def times(self) -> np.ndarray:
        return self.cfg.save_indices * self.cfg.dt


def _trajectory(engine: GalerkinEngine, run: _Run, p: int, seed: Tuple[int, int]) -> Trajectory:
    cfg = engine.cfg
    traj = Trajectory(domain=engine.dom, times=engine.times(), coefficients=run.saved[p],
                      dt=cfg.dt, n_modes=cfg.n_modes, path_seed=seed)
    if run.states is not None:
        traj.ito_states, traj.drift_record = run.states[p], run.Y[p]
        traj.diffusion_record, traj.increments = run.Z[p], run.dW[p]
    return traj


def simulate(cfg: StepperConfig, dom: SpectralDomain, drift: DriftSpec, noise: NoiseSpec, X0: Field,
             master_seed: int, path_idx: int = 0, refinement_level: int = 0) -> Trajectory:
    """Trayectoria determinista dada (semilla, ruta, configuración).

    Con refinement_level = ℓ los incrementos se obtienen refinando ℓ veces la
    ruta browniana de paso dt·2^ℓ, de modo que rutas con distinto dt comparten
    el mismo movimiento browniano.
    """
    engine = GalerkinEngine(cfg, dom, drift, noise)
    dW = engine.increments(master_seed, [path_idx], refinement_level)
    run = engine.integrate(X0.coefficients[None, :], dW, record=cfg.record_ito)
    return _trajectory(engine, run, 0, (int(master_seed), int(path_idx)))


def simulate_pair(cfg: StepperConfig, dom: SpectralDomain, drift: DriftSpec, noise: NoiseSpec,
                  X0: Field, Y0: Field, seed: int, path_idx: int = 0) -> Tuple[Trajectory, Trajectory]:
    """Dos trayectorias conducidas por los mismos incrementos."""
    engine = GalerkinEngine(cfg, dom, drift, noise)
    dW = np.repeat(engine.increments(seed, [path_idx]), 2, axis=0)
    run = engine.integrate(np.stack((X0.coefficients, Y0.coefficients)), dW, record=cfg.record_ito)
    key = (int(seed), int(path_idx))
    return _trajectory(engine, run, 0, key), _trajectory(engine, run, 1, key)


# ---------------------------------------------------------------------------
# Observables y conjuntos

Observable = Callable[[SpectralDomain, Optional[DriftSpec], np.ndarray, Optional[np.ndarray]], np.ndarray]


def _young(drift: Optional[DriftSpec]):
    if drift is None or drift.psi.young_function is None:
        raise ValidationError("el observable requiere una Ψ con función de Young asociada")
    return drift.psi.young_function


def _needs_pair(Y: Optional[np.ndarray]) -> np.ndarray:
    if Y is None:
        raise ValidationError("diff_h_norm_sq requiere un conjunto de pares")
    return Y


OBSERVABLES: Dict[str, Observable] = {
    "h_norm_sq": lambda dom, drift, X, Y: dom.h_inner_coefs(X, X),
    "diff_h_norm_sq": lambda dom, drift, X, Y: dom.h_inner_coefs(X - _needs_pair(Y), X - _needs_pair(Y)),
    "R": lambda dom, drift, X, Y: R_values(dom, drift.psi.young_function if drift else None,
                                           dom.from_spectral(X)),
    "m_N": lambda dom, drift, X, Y: dom.measure(_young(drift)(dom.from_spectral(X))),
    "max_norm": lambda dom, drift, X, Y: np.max(np.abs(dom.from_spectral(X)), axis=-1),
}

_INDEXED = re.compile(r"^(mode|h_coord)_(\d+)$")


def observable(name: str) -> Observable:
    """Observable por nombre; mode_k = X̂_k y h_coord_k = ⟨X, ê_k⟩_H (Lipschitz 1)."""
    if name in OBSERVABLES:
        return OBSERVABLES[name]
    match = _INDEXED.match(name)
    if not match:
        raise ValidationError(f"observable desconocido: {name}")
    kind, k = match.group(1), int(match.group(2))

    def indexed(dom, drift, X, Y):
        if not 1 <= k <= dom.n_grid:
            raise ValidationError(f"modo {k} fuera de [1, {dom.n_grid}]")
        if kind == "mode":
            return X[..., k - 1]
        return X[..., k - 1] / np.sqrt(dom.eigenvalues[k - 1])
    return indexed


@dataclass
class EnsembleResult:
    """Observables por ruta: values[nombre] tiene forma (n_rutas, n_tiempos)."""

    times: np.ndarray
    values: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return next(iter(self.values.values())).shape[0] if self.values else 0

    def mean(self, name: str) -> np.ndarray:
        return self.values[name].mean(axis=0)

    def var(self, name: str) -> np.ndarray:
        return self.values[name].var(axis=0, ddof=1)

    def se(self, name: str) -> np.ndarray:
        return np.sqrt(self.var(name) / self.n_paths)

    def stat_table(self) -> pd.DataFrame:
        data = {"t": self.times}
        for name in self.values:
            data[f"{name}_mean"] = self.mean(name)
            data[f"{name}_var"] = self.var(name)
            data[f"{name}_se"] = self.se(name)
        return pd.DataFrame(data)


def _resolve_threads(threads: int) -> int:
    if threads == 0:
        return os.cpu_count() or 1
    return max(1, int(threads))


def run_ensemble(cfg: StepperConfig, dom: SpectralDomain, drift: DriftSpec, noise: NoiseSpec,
                 X0: Field, master_seed: int, ensemble_size: int, observables: Sequence[str],
                 Y0: Optional[Field] = None, threads: int = 1, first_path: int = 0) -> EnsembleResult:
    """Conjunto de rutas (o pares X, Y con ruido común si se da Y0).

    Las rutas se procesan en bloques de tamaño fijo, independiente del número de
    hilos, y los bloques se concatenan en orden: el resultado no depende de la
    planificación.
    """
    if ensemble_size < 2:
        raise ValidationError("el conjunto necesita al menos 2 rutas")
    engine = GalerkinEngine(cfg, dom, drift, noise)
    fns = {name: observable(name) for name in observables}
    paths = np.arange(first_path, first_path + ensemble_size)
    chunks = [paths[i:i + config.ENSEMBLE_CHUNK] for i in range(0, paths.size, config.ENSEMBLE_CHUNK)]

    def work(chunk: np.ndarray) -> Dict[str, np.ndarray]:
        dW = engine.increments(master_seed, chunk)
        P = chunk.size
        if Y0 is None:
            run = engine.integrate(np.repeat(X0.coefficients[None, :], P, axis=0), dW)
            X, Y = run.saved, None
        else:
            start = np.concatenate((np.repeat(X0.coefficients[None, :], P, axis=0),
                                    np.repeat(Y0.coefficients[None, :], P, axis=0)))
            run = engine.integrate(start, np.concatenate((dW, dW)))
            X, Y = run.saved[:P], run.saved[P:]
        return {name: fn(dom, drift, X, Y) for name, fn in fns.items()}

    n_threads = min(_resolve_threads(threads), len(chunks))
    logger.info("conjunto de %d rutas en %d bloques (%d hilos)", ensemble_size, len(chunks), n_threads)
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    result = EnsembleResult(times=engine.times())
    for name in fns:
        result.values[name] = np.concatenate([part[name] for part in parts], axis=0)
    return result


def monte_carlo(cfg: StepperConfig, ensemble_size: int, observables: Sequence[str],
                dom: SpectralDomain, drift: DriftSpec, noise: NoiseSpec, X0: Field,
                master_seed: int, Y0: Optional[Field] = None, threads: int = 1) -> pd.DataFrame:
    """StatTable: media, varianza y error estándar por tiempo guardado."""
    return run_ensemble(cfg, dom, drift, noise, X0, master_seed, ensemble_size, observables,
                        Y0=Y0, threads=threads).stat_table()
