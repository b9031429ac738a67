"""Ejecutor de experimentos por línea de comandos.

    python cli.py <subcomando> --config configs/pme.json --out resultados/

Cada subcomando escribe sus CSV y un manifest.json en --out. Códigos de
salida: 0 PASS, 1 FAIL, 2 configuración inválida, 3 explosión numérica o
Newton sin convergencia.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

import config
from data.loader import ConfigLoader
from data.schema import (ExperimentConfig, build_domain, build_drift, build_initial, build_noise,
                         build_stepper, dumps, resolve_seed)
from utils import verify
from utils.drift import DriftSpec, HReport, check_A1, check_A2, check_H, check_K
from utils.exceptions import (BlowUpError, ConfigError, ConvergenceError, SimulacionError)
from utils.export import write_csv, write_manifest
from utils.galerkin import StepperConfig, run_ensemble, simulate
from utils.noise import NoiseSpec
from utils.triple import Field, SpectralDomain, h_norm

logger = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
OU_CHECK_TIMES = (0.1, 0.5, 2.0)


def _configure_logging(level: int) -> None:
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)
    logging.captureWarnings(True)


@dataclass
class Experiment:
    """Objetos del núcleo construidos a partir de una configuración validada."""

    cfg: ExperimentConfig
    seed: int
    threads: int
    dom: SpectralDomain
    drift: DriftSpec
    noise: NoiseSpec
    stepper: StepperConfig
    X0: Field

    @classmethod
    def build(cls, cfg: ExperimentConfig, seed: int, threads: int) -> "Experiment":
        dom = build_domain(cfg)
        return cls(cfg, seed, threads, dom, build_drift(cfg, dom), build_noise(cfg),
                   build_stepper(cfg), build_initial(dom, cfg.initial))

    def alternate_start(self) -> Field:
        if self.cfg.initial_alt is None:
            raise ConfigError("initial_alt", "este subcomando necesita una segunda condición inicial")
        return build_initial(self.dom, self.cfg.initial_alt, "initial_alt")

    def h_report(self) -> HReport:
        rng = np.random.default_rng(self.seed)
        return check_H(self.dom, self.drift, self.noise, self.cfg.verify.check_samples, rng)

    def declared_c(self) -> float:
        if self.cfg.verify.declared_c is not None:
            return self.cfg.verify.declared_c
        c = self.h_report().c
        logger.info("c tomada del informe H: %.6g", c)
        return c


# Cada subcomando devuelve (aprobado, línea de resumen, {archivo: tabla})
Outcome = Tuple[bool, str, Dict[str, pd.DataFrame]]


def cmd_simulate(exp: Experiment) -> Outcome:
    traj = simulate(exp.stepper, exp.dom, exp.drift, exp.noise, exp.X0, exp.seed, 0)
    tables = {"trajectory.csv": traj.to_frame(("h_norm_sq", "R", "max_norm"), exp.drift)}
    n = exp.cfg.run.ensemble_size
    if n >= 2:
        ens = run_ensemble(exp.stepper, exp.dom, exp.drift, exp.noise, exp.X0, exp.seed, n,
                           ("h_norm_sq", "R", "max_norm"), threads=exp.threads)
        tables["stats.csv"] = ens.stat_table()
    summary = (f"simulate n_paths={n} n_times={traj.times.size} "
               f"h_norm_sq(T)={tables['trajectory.csv']['h_norm_sq'].iloc[-1]:.6g}")
    return True, summary, tables


def cmd_check_conditions(exp: Experiment) -> Outcome:
    reports = []
    if exp.drift.psi.young_function is not None:
        reports.append(check_A1(exp.drift) if exp.drift.mode == "A1" else check_A2(exp.drift, exp.dom))
        reports.append(check_K(exp.dom, exp.drift, exp.cfg.verify.check_samples,
                               np.random.default_rng(exp.seed)))
    reports.append(exp.h_report())
    table = pd.concat([r.to_frame() for r in reports], ignore_index=True)
    passed = all(r.passed for r in reports)
    return passed, " ; ".join(r.summary_line() for r in reports), {"conditions.csv": table}


def cmd_ito_check(exp: Experiment) -> Outcome:
    if exp.noise.is_zero:
        # sin ruido el residuo debe coincidir con el resto Σ dt²‖Y‖²_H
        traj = simulate(replace(exp.stepper, record_ito=True), exp.dom, exp.drift, exp.noise,
                        exp.X0, exp.seed, 0)
        ledger = verify.ito_ledger(traj)
        rel = ledger.skeleton_gap()
        passed = rel <= config.ITO_SKELETON_RTOL
        summary = (f"{'PASS' if passed else 'FAIL'} ito-check skeleton_gap={rel:.3e} "
                   f"tol={config.ITO_SKELETON_RTOL:.0e} n={ledger.residual.size}")
        return passed, summary, {"ito_ledger.csv": ledger.to_frame()}
    report = verify.ito_refinement_study(exp.stepper, exp.dom, exp.drift, exp.noise, exp.X0,
                                         exp.seed, exp.cfg.verify.refinement_levels)
    return report.passed, report.summary_line(), {"ito_refinement.csv": report.to_frame()}


def cmd_contraction(exp: Experiment) -> Outcome:
    Y0 = exp.alternate_start()
    ens = run_ensemble(exp.stepper, exp.dom, exp.drift, exp.noise, exp.X0, exp.seed,
                       exp.cfg.run.ensemble_size, ("diff_h_norm_sq",), Y0=Y0, threads=exp.threads)
    report = verify.contraction_test(ens, exp.declared_c())
    return report.passed, report.summary_line(), {"contraction.csv": report.to_frame()}


def cmd_energy(exp: Experiment) -> Outcome:
    h = exp.h_report()
    ens = run_ensemble(exp.stepper, exp.dom, exp.drift, exp.noise, exp.X0, exp.seed,
                       exp.cfg.run.ensemble_size, ("h_norm_sq", "R"), threads=exp.threads)
    report = verify.energy_estimate(ens, h.c1, h.c2 * exp.cfg.verify.energy_c2_factor, h.f)
    return report.passed, report.summary_line(), {"energy.csv": report.to_frame()}


def cmd_extinction(exp: Experiment) -> Outcome:
    traj = simulate(exp.stepper, exp.dom, exp.drift, exp.noise, exp.X0, exp.seed, 0)
    t_ext = verify.extinction_time(traj, exp.cfg.verify.eps)
    table = traj.to_frame(("h_norm_sq", "max_norm"))
    label = "none" if t_ext is None else f"{t_ext:.6g}"
    return True, f"extinction eps={exp.cfg.verify.eps:.3g} t={label}", {"extinction.csv": table}


def cmd_ou_oracle(exp: Experiment) -> Outcome:
    T = exp.stepper.T
    times = exp.cfg.verify.check_times or tuple(t for t in OU_CHECK_TIMES if t <= T) or (T,)
    report = verify.ou_oracle_test(exp.stepper, exp.dom, exp.drift, exp.noise, exp.X0, exp.seed,
                                   exp.cfg.run.ensemble_size, times, exp.cfg.verify.n_check_modes,
                                   threads=exp.threads)
    return report.passed, report.summary_line(), {"ou_oracle.csv": report.to_frame()}


def _lipschitz(dom: SpectralDomain, name: str) -> float:
    """Constante de Lipschitz respecto de ‖·‖_H de los observables lineales."""
    if name.startswith("h_coord_"):
        return 1.0
    if name.startswith("mode_"):
        return float(np.sqrt(dom.eigenvalues[int(name.split("_")[1]) - 1]))
    raise ConfigError("verify.observable", "la ergodicidad requiere mode_k o h_coord_k")


def cmd_ergodicity(exp: Experiment) -> Outcome:
    name = exp.cfg.verify.observable
    lip = _lipschitz(exp.dom, name)
    Y0 = exp.alternate_start()
    n = exp.cfg.run.ensemble_size
    observables = (name, "h_norm_sq")
    ens_x = run_ensemble(exp.stepper, exp.dom, exp.drift, exp.noise, exp.X0, exp.seed, n,
                         observables, threads=exp.threads)
    ens_y = run_ensemble(exp.stepper, exp.dom, exp.drift, exp.noise, Y0, exp.seed, n,
                         observables, threads=exp.threads, first_path=n)
    report = verify.ergodicity_test(ens_x, ens_y, name, lip, h_norm(exp.dom, exp.X0 - Y0),
                                    exp.declared_c())
    return report.passed, report.summary_line(), {"ergodicity.csv": report.to_frame()}


COMMANDS: Dict[str, Callable[[Experiment], Outcome]] = {
    "simulate": cmd_simulate,
    "check-conditions": cmd_check_conditions,
    "ito-check": cmd_ito_check,
    "contraction": cmd_contraction,
    "energy": cmd_energy,
    "extinction": cmd_extinction,
    "ou-oracle": cmd_ou_oracle,
    "ergodicity": cmd_ergodicity,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Simulación y verificación de ecuaciones de medio poroso estocásticas")
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, required=True, help="configuración JSON del experimento")
    parser.add_argument("--out", type=Path, default=Path("out"), help="directorio de resultados")
    parser.add_argument("--seed", type=int, default=None,
                        help=f"semilla maestra (prioridad sobre la configuración y ${config.SEED_ENV_VAR})")
    parser.add_argument("--threads", type=int, default=1, help="hilos para el conjunto (0 = automático)")
    parser.add_argument("--verbose", action="store_true", help="registro a nivel DEBUG")
    return parser


def run(subcommand: str, config_path: Path, out_dir: Path, seed: Optional[int] = None,
        threads: int = 1) -> int:
    """Ejecuta un subcomando y devuelve el código de salida."""
    try:
        if seed is not None and seed < 0:
            raise ConfigError("--seed", "debe ser no negativa")
        cfg = ConfigLoader.from_path(config_path)
        master_seed = resolve_seed(cfg, seed)
        exp = Experiment.build(cfg, master_seed, threads)
        passed, summary, tables = COMMANDS[subcommand](exp)
    except ConfigError as e:
        print(f"ERROR de configuración en {e.key_path}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, ConvergenceError) as e:
        print(f"ERROR numérico en el paso {e.step}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except SimulacionError as e:
        print(f"FAIL {subcommand}: {e}", file=sys.stderr)
        return EXIT_FAIL

    out_dir.mkdir(parents=True, exist_ok=True)
    for file_name, table in tables.items():
        write_csv(table, out_dir / file_name)
    write_manifest(out_dir, subcommand, dumps(cfg), master_seed, tables, summary)
    print(summary)
    return EXIT_PASS if passed else EXIT_FAIL


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    _configure_logging(logging.DEBUG if args.verbose else logging.INFO)
    return run(args.subcommand, args.config, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
