"""Verificación numérica a lo largo de trayectorias simuladas: fórmula de Itô,
contracción, estimación de energía, extinción, oráculo lineal y ergodicidad.

Todos los criterios estocásticos usan bandas de SE_BAND errores estándar.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import linregress

import config
from utils.drift import DriftSpec
from utils.exceptions import PreconditionError, ValidationError
from utils.galerkin import (EnsembleResult, StepperConfig, Trajectory, run_ensemble,
                            simulate)
from utils.noise import NoiseSpec
from utils.triple import Field, SpectralDomain

logger = logging.getLogger(__name__)


@dataclass
class VerificationReport:
    name: str
    passed: bool
    constant: float
    tolerance: float
    n_samples: int
    table: pd.DataFrame = field(default_factory=pd.DataFrame)
    details: Dict[str, Any] = field(default_factory=dict)

    def summary_line(self) -> str:
        extra = " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.details.items())
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name} constant={self.constant:.6g} "
                f"tol={self.tolerance:.3g} n={self.n_samples} {extra}").rstrip()

    def to_frame(self) -> pd.DataFrame:
        return self.table


class EnergyReport(VerificationReport):
    @property
    def first_violation(self) -> Optional[float]:
        return self.details.get("first_violation")


# ---------------------------------------------------------------------------
# Fórmula de Itô


@dataclass
class ItoLedger:
    """Términos de la descomposición de ‖X‖²_H paso a paso."""

    times: np.ndarray
    h_norm_sq: np.ndarray
    pairing: np.ndarray
    hs: np.ndarray
    martingale: np.ndarray
    residual: np.ndarray
    skeleton: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        pad = lambda a: np.concatenate(([np.nan], a))
        return pd.DataFrame({"t": self.times, "h_norm_sq": self.h_norm_sq,
                             "pairing": pad(self.pairing), "hs": pad(self.hs),
                             "martingale": pad(self.martingale), "residual": self.residual,
                             "skeleton": self.skeleton})

    def skeleton_gap(self) -> float:
        """max_k |residuo_k − esqueleto_k| / |esqueleto_k|; sin ruido debe ser redondeo."""
        gap = np.abs(self.residual - self.skeleton)
        scale = np.maximum(np.abs(self.skeleton), np.finfo(float).tiny)
        return float(np.max(gap / scale))


def ito_ledger(traj: Trajectory) -> ItoLedger:
    if not traj.has_ito_records or traj.ito_states is None:
        raise PreconditionError("la trayectoria no registró Y, Z (record_ito=False)")
    dom, dt, m = traj.domain, traj.dt, traj.n_modes
    X, Y, Z, dW = traj.ito_states, traj.drift_record, traj.diffusion_record, traj.increments
    lam = dom.eigenvalues[:m]
    hn = dom.h_inner_coefs(X, X)
    pairing = 2.0 * dom.h_inner_coefs(Y, X[:-1])
    hs = np.sum(Z ** 2 / lam, axis=-1)
    martingale = 2.0 * np.sum(Z * dW * X[:-1, :m] / lam, axis=-1)
    rhs = hn[0] + np.concatenate(([0.0], np.cumsum((pairing + hs) * dt + martingale)))
    skeleton = np.concatenate(([0.0], np.cumsum(dt ** 2 * dom.h_inner_coefs(Y, Y))))
    times = np.arange(X.shape[0]) * dt
    return ItoLedger(times, hn, pairing, hs, martingale, hn - rhs, skeleton)


def ito_residual(traj: Trajectory) -> Tuple[float, np.ndarray]:
    """(max |residuo|, residuos por paso)."""
    ledger = ito_ledger(traj)
    return float(np.max(np.abs(ledger.residual))), ledger.residual


def ito_refinement_study(cfg: StepperConfig, dom: SpectralDomain, drift: DriftSpec,
                         noise: NoiseSpec, X0: Field, master_seed: int, levels: int = 3,
                         path_idx: int = 0, min_order: float = 0.8) -> VerificationReport:
    """Residuo máximo con dt, dt/2, ... sobre el mismo movimiento browniano."""
    rows = []
    for level in range(levels):
        cfg_l = replace(cfg, dt=cfg.dt / 2 ** level, record_ito=True)
        traj = simulate(cfg_l, dom, drift, noise, X0, master_seed, path_idx, refinement_level=level)
        res, _ = ito_residual(traj)
        rows.append({"dt": cfg_l.dt, "max_residual": res})
    table = pd.DataFrame(rows)
    res = table["max_residual"].to_numpy()
    with np.errstate(divide="ignore", invalid="ignore"):
        order = np.concatenate(([np.nan], np.log2(res[:-1] / res[1:])))
    table["order"] = order
    decreasing = bool(np.all(np.diff(res) < 0))
    worst = float(np.nanmin(order)) if levels > 1 else np.nan
    passed = decreasing and (levels < 2 or worst >= min_order)
    report = VerificationReport("ito-check", passed, worst, min_order, levels, table,
                                {"dt0": cfg.dt, "monotone": decreasing})
    logger.info(report.summary_line())
    return report


# ---------------------------------------------------------------------------
# Contracción y energía


def contraction_test(ensemble: EnsembleResult, declared_c: float,
                     band: float = config.SE_BAND) -> VerificationReport:
    """Pendiente de log E‖X_t − Y_t‖²_H frente a la c declarada."""
    if ensemble.n_paths < config.MIN_CONTRACTION_PATHS:
        raise PreconditionError(
            f"se necesitan al menos {config.MIN_CONTRACTION_PATHS} pares, hay {ensemble.n_paths}")
    t = ensemble.times
    mean = ensemble.mean("diff_h_norm_sq")
    if not np.any(mean > 0):
        raise PreconditionError("X0 = Y0: la pendiente no está definida")
    mask = (t >= config.SLOPE_TRANSIENT * t[-1]) & (mean > config.SLOPE_FLOOR)
    if mask.sum() < 3:
        raise PreconditionError("muy pocos tiempos útiles para ajustar la pendiente")
    fit = linregress(t[mask], np.log(mean[mask]))
    se = float(fit.stderr)
    passed = bool(fit.slope <= declared_c + band * se)
    table = pd.DataFrame({"t": t, "diff_h_norm_sq_mean": mean,
                          "diff_h_norm_sq_se": ensemble.se("diff_h_norm_sq"), "used": mask})
    report = VerificationReport("contraction", passed, declared_c, band * se, ensemble.n_paths,
                                table, {"slope": float(fit.slope), "slope_se": se})
    logger.info(report.summary_line())
    return report


def max_distance_increase(traj_x: Trajectory, traj_y: Trajectory) -> float:
    """max_k (‖X_{k+1} − Y_{k+1}‖_H − ‖X_k − Y_k‖_H) sobre los estados guardados."""
    dom = traj_x.domain
    diff = traj_x.coefficients - traj_y.coefficients
    dist = np.sqrt(dom.h_inner_coefs(diff, diff))
    return float(np.max(np.diff(dist))) if dist.size > 1 else 0.0


def energy_estimate(ensemble: EnsembleResult, c1: float, c2: float, f: float,
                    band: float = config.SE_BAND) -> EnergyReport:
    """e^{−c₁t}E‖X_t‖² + c₂∫e^{−c₁s}E R(X_s)ds ≤ E‖X₀‖² + ∫e^{−c₁s} f ds en cada tiempo guardado."""
    t = ensemble.times
    hn = ensemble.values["h_norm_sq"]
    r = ensemble.values["R"]
    weight = np.exp(-c1 * t)
    dt = np.diff(t)
    integral = np.concatenate((np.zeros((r.shape[0], 1)),
                               np.cumsum(weight[:-1] * r[:, :-1] * dt, axis=1)), axis=1)
    lhs_paths = weight * hn + c2 * integral
    lhs = lhs_paths.mean(axis=0)
    se = lhs_paths.std(axis=0, ddof=1) / np.sqrt(lhs_paths.shape[0])
    forcing = np.concatenate(([0.0], np.cumsum(weight[:-1] * f * dt)))
    rhs = hn[:, 0].mean() + forcing
    ok = lhs <= rhs + band * se
    first = float(t[np.argmin(ok)]) if not ok.all() else None
    table = pd.DataFrame({"t": t, "lhs": lhs, "lhs_se": se, "rhs": rhs, "ok": ok})
    details = {"c1": c1, "c2": c2, "f": f, "sup_h_norm_sq": float(hn.mean(axis=0).max())}
    if first is not None:
        details["first_violation"] = first
    report = EnergyReport("energy", bool(ok.all()), c2, band, ensemble.n_paths, table, details)
    logger.info(report.summary_line())
    return report


# ---------------------------------------------------------------------------
# Extinción y oráculo lineal


def extinction_time(traj: Trajectory, eps: float) -> Optional[float]:
    """Primer tiempo guardado con max|X_t| < eps, o None."""
    if not eps > 0:
        raise ValidationError("eps debe ser positivo")
    values = traj.domain.from_spectral(traj.coefficients)
    below = np.max(np.abs(values), axis=-1) < eps
    if not below.any():
        return None
    return float(traj.times[int(np.argmax(below))])


def ou_oracle(dom: SpectralDomain, drift: DriftSpec, noise: NoiseSpec, X0: Field,
              t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Media e^{−κλ_k t}X̂_k(0) y varianza σ_k²(1 − e^{−2κλ_k t})/(2κλ_k) por modo."""
    if not drift.is_linear or not noise.is_additive:
        raise PreconditionError("el oráculo OU requiere Ψ lineal, Φ ≡ 0 y ruido aditivo")
    rate = drift.linear_rate * dom.eigenvalues
    sigma = np.zeros(dom.n_grid)
    sigma[:noise.n_modes] = noise.mult.rho_max * noise.sigma
    mean = np.exp(-rate * t) * X0.coefficients
    var = sigma ** 2 * (-np.expm1(-2.0 * rate * t)) / (2.0 * rate)
    return mean, var


def ou_oracle_test(cfg: StepperConfig, dom: SpectralDomain, drift: DriftSpec, noise: NoiseSpec,
                   X0: Field, master_seed: int, ensemble_size: int, check_times: Sequence[float],
                   n_check_modes: Optional[int] = None, threads: int = 1) -> VerificationReport:
    """z-scores de media y varianza por modo frente a la forma cerrada.

    PASS si max|z| < 3.5 y a lo sumo una estadística tiene |z| ≥ 3.
    """
    n_check = n_check_modes or min(cfg.n_modes, noise.n_modes)
    names = [f"mode_{k}" for k in range(1, n_check + 1)]
    ens = run_ensemble(cfg, dom, drift, noise, X0, master_seed, ensemble_size, names, threads=threads)
    rows = []
    for t in check_times:
        i = int(np.argmin(np.abs(ens.times - t)))
        mu, var = ou_oracle(dom, drift, noise, X0, float(ens.times[i]))
        for k, name in enumerate(names):
            x = ens.values[name][:, i]
            n = x.size
            m_hat, v_hat = float(x.mean()), float(x.var(ddof=1))
            se_m = np.sqrt(v_hat / n)
            m4 = float(np.mean((x - m_hat) ** 4))
            se_v = np.sqrt(max(m4 - v_hat ** 2, 0.0) / n)
            rows.append({"t": float(ens.times[i]), "mode": k + 1,
                         "mean": m_hat, "mean_exact": mu[k], "z_mean": _z(m_hat - mu[k], se_m),
                         "var": v_hat, "var_exact": var[k], "z_var": _z(v_hat - var[k], se_v)})
    table = pd.DataFrame(rows)
    z = np.abs(table[["z_mean", "z_var"]].to_numpy().ravel())
    max_z = float(z.max()) if z.size else 0.0
    passed = max_z < 3.5 and int(np.sum(z >= config.SE_BAND)) <= 1
    report = VerificationReport("ou-oracle", passed, max_z, config.SE_BAND, ensemble_size, table,
                                {"max_z": max_z, "n_stats": int(z.size)})
    logger.info(report.summary_line())
    return report


def _z(diff: float, se: float) -> float:
    if se > 0:
        return float(diff / se)
    return 0.0 if abs(diff) <= 1e-12 else float(np.sign(diff) * np.inf)


# ---------------------------------------------------------------------------
# Ergodicidad


def ergodicity_test(ens_x: EnsembleResult, ens_y: EnsembleResult, name: str, lipschitz: float,
                    start_distance: float, declared_c: float,
                    band: float = config.SE_BAND) -> VerificationReport:
    """|E F(X_t^x) − E F(X_t^y)| ≤ e^{ct/2}·Lip(F)·‖x − y‖_H + band·SE combinado.

    Además compara las medias temporales de la segunda mitad del horizonte e
    informa la cota de mezcla y el segundo momento estacionario (sin afirmarlos).
    """
    if not declared_c < 0:
        raise PreconditionError("la prueba de ergodicidad requiere c < 0 declarada")
    t = ens_x.times
    diff = np.abs(ens_x.mean(name) - ens_y.mean(name))
    se = np.sqrt(ens_x.se(name) ** 2 + ens_y.se(name) ** 2)
    bound = np.exp(declared_c * t / 2.0) * lipschitz * start_distance
    ok = diff <= bound + band * se
    late = t >= t[-1] / 2.0
    avg_x = ens_x.values[name][:, late].mean(axis=1)
    avg_y = ens_y.values[name][:, late].mean(axis=1)
    gap = abs(float(avg_x.mean() - avg_y.mean()))
    gap_se = float(np.sqrt(avg_x.var(ddof=1) / avg_x.size + avg_y.var(ddof=1) / avg_y.size))
    averages_ok = gap <= band * gap_se
    details: Dict[str, Any] = {"time_average_gap": gap, "time_average_se": gap_se}

    table = pd.DataFrame({"t": t, "diff": diff, "bound": bound, "se": se, "ok": ok})
    pooled = np.concatenate((avg_x, avg_y))
    mu_f = float(pooled.mean())
    if "h_norm_sq" in ens_x.values and "h_norm_sq" in ens_y.values:
        second = float(np.concatenate((ens_x.values["h_norm_sq"][:, late].ravel(),
                                       ens_y.values["h_norm_sq"][:, late].ravel())).mean())
        details["stationary_second_moment"] = second
        # μ(‖x − ·‖²_H) ≤ (‖x‖_H + μ(‖·‖²_H)^{1/2})², con ‖x‖_H tomado del estado inicial
        x_norm = float(np.sqrt(ens_x.values["h_norm_sq"][0, 0]))
        spread = (x_norm + np.sqrt(second)) ** 2
        table["mixing_lhs"] = (ens_x.mean(name) - mu_f) ** 2
        table["mixing_bound"] = lipschitz ** 2 * np.exp(declared_c * t) * spread
    report = VerificationReport("ergodicity", bool(ok.all() and averages_ok), declared_c, band,
                                ens_x.n_paths + ens_y.n_paths, table, details)
    logger.info(report.summary_line())
    return report
