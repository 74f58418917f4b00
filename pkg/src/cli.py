#!/usr/bin/env python3
"""
CLI principal de readout-sim.
Permite mapear baños a cadenas, calibrar el resonador, barrer la amplitud de lectura
y comparar con la ecuación maestra de Lindblad.
"""
import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

# Agregar la raíz del repo al path
sys.path.insert(0, str(Path(__file__).parent.parent))

from config.readout_config import BathKind, Kernel, RunConfig, load_run_config, swapped_detuning
from src.data.input_validator import InputValidator
from src.data.spectral_bath import (chain_from_config, chain_to_frame, evaluate, reconstruct_sdf,
                                    spectral_density_from_config)
from src.execution import experiments
from src.system.system_model import (CircuitParams, build_undriven_hamiltonian, dressed_basis,
                                     dressed_spectrum_frame, is_dispersive, truncation_dims)
from src.utils.errors import ChainBreakdownError, ConfigValidationError, ReadoutSimError
from src.utils.export import _jsonable, write_csv_atomic, write_manifest
from src.utils.logger import logger


class RunContext:
    """Directorio de salida, artefactos escritos y manifiesto de un subcomando"""

    def __init__(self, command: str, config: RunConfig):
        self.command = command
        self.out_dir = config.output.resolve_out_dir() / command
        if not config.output.checkpoint_dir:
            config = replace(config, output=replace(config.output,
                                                    checkpoint_dir=str(self.out_dir / "checkpoints")))
        self.config = config
        self.outputs: List[str] = []
        self.extra: Dict = {}
        self.started_at = time.time()

    def write(self, df: pd.DataFrame, name: str) -> Path:
        path = write_csv_atomic(df, self.out_dir / name)
        self.outputs.append(name)
        print(f"  💾 {path}")
        return path

    def finish(self):
        checkpoints = Path(self.config.output.checkpoint_dir)
        if checkpoints.is_dir():
            self.extra["checkpoints"] = sorted(p.name for p in checkpoints.glob("*.mps"))
        write_manifest(self.out_dir / "manifest.json", self.command, self.config, self.outputs,
                       self.started_at, self.extra)
        logger.save_structured_logs(str(self.out_dir / "structured_log.json"))


def _calibration_from_args(args, ctx: RunContext, setup=None) -> experiments.CalibrationResult:
    """Usa --omega-a0/--omega-a1 si se dan; si no, corre la calibración"""
    config = ctx.config
    if args.omega_a0 is not None and args.omega_a1 is not None:
        cal = experiments.CalibrationResult(bath_kind=config.bath.kind.value, omega_a0=args.omega_a0,
                                            omega_a1=args.omega_a1)
        cal.validate(config.circuit.omega_a)
        return cal
    if setup is None:
        setup = experiments.prepare_bath(config)
    cal, _ = experiments.calibrate(config, setup, jobs=config.output.jobs)
    ctx.write(cal.to_frame(), "calibration.csv")
    return cal


def run_chain_coeffs(args, ctx: RunContext) -> int:
    """
    Mapea J a una cadena de N sitios y exporta {i, e_i, t_i}.
    """
    config = ctx.config
    circuit = config.circuit
    print(f"🔗 Chain mapping ({config.bath.kind.value}, N={config.evolution.chain_length})...")
    J = spectral_density_from_config(config.bath, circuit.kappa, circuit.omega_a, circuit.omega_q)
    chain = chain_from_config(J, config.evolution.chain_length, config.bath)
    is_valid, report = InputValidator().validate_chain(chain)
    if not is_valid:
        raise ChainBreakdownError(f"{report['reason']} ({report['suggestion']})")
    ctx.write(chain_to_frame(chain), "chain.csv")
    ctx.extra.update({"k0": chain.k0, "alpha": J.alpha})
    t_last = chain.t[-1] if chain.length > 1 else float("nan")
    print(f"  k0 = {chain.k0:.10g}, e_last = {chain.e[-1]:.10g}, t_last = {t_last:.10g}")
    return 0


def run_reconstruct_sdf(args, ctx: RunContext) -> int:
    """
    Reconstruye J desde la cadena con un núcleo de ensanchamiento y la compara con la exacta.
    """
    config = ctx.config
    circuit = config.circuit
    J = spectral_density_from_config(config.bath, circuit.kappa, circuit.omega_a, circuit.omega_q)
    chain = chain_from_config(J, config.evolution.chain_length, config.bath)
    lo, hi = J.support()
    grid = np.linspace(lo, hi, args.grid_points)
    rec = reconstruct_sdf(chain, eta=args.eta, kernel=Kernel(args.kernel), grid=grid)
    frame = rec.to_frame("J_reconstructed")
    frame["J"] = evaluate(J, grid)
    ctx.write(frame, "sdf_reconstructed.csv")
    ctx.extra["eta"] = rec.eta
    print(f"🔍 Reconstructed J with {args.kernel} kernel, eta = {rec.eta:.4g} GHz")
    return 0


def run_calibrate(args, ctx: RunContext) -> int:
    config = ctx.config
    print(f"🎯 Calibrating resonator frequencies ({config.bath.kind.value})...")
    setup = experiments.prepare_bath(config)
    cal, runs = experiments.calibrate(config, setup, n=args.photons, jobs=config.output.jobs)
    ctx.write(cal.to_frame(), "calibration.csv")
    for j, result in runs.items():
        ctx.write(result.spectrum_frame(), f"spectrum_j{j}.csv")
        ctx.write(result.series.to_frame(), f"series_j{j}.csv")
    print(f"  ω_a0 = {cal.omega_a0:.4f} GHz, ω_a1 = {cal.omega_a1:.4f} GHz, ω̄ = {cal.omega_bar:.4f} GHz")
    if cal.reference:
        print(f"  reference: {cal.reference}")
    return 0


def run_free_decay(args, ctx: RunContext) -> int:
    config = ctx.config
    print(f"📉 Free decay from |{args.j}̄{args.n}⟩...")
    setup = experiments.prepare_bath(config)
    result = experiments.free_decay(config, setup, args.j, args.n, kt_final=args.kt_final,
                                    resume_from=args.resume)
    ctx.write(result.series.to_frame(), "series.csv")
    ctx.write(result.spectrum_frame(), "spectrum.csv")
    ctx.extra.update({"resonator_peak": result.peak, "ww_relative_l2": result.ww_error,
                      "ww_within_tolerance": result.ww_within_tolerance, "qubit_peak": result.qubit_peak,
                      "projection_error": result.series.diagnostics.get("projection_error")})
    print(f"  resonator peak = {result.peak:.4f} GHz")
    if result.ww_error is not None:
        print(f"  Wigner-Weisskopf relative L2 error = {result.ww_error:.3%}")
    return 0


def _print_sweep(result: experiments.RateSweepResult):
    frame = result.to_frame()
    print(f"\n📊 {result.method.upper()} sweep:")
    print(frame[["eps_d", "nbar", "gamma10_MHz", "ratio", "residual", "delta_sat_flag"]].to_string(index=False))


def run_readout_sweep(args, ctx: RunContext) -> int:
    config = ctx.config
    print(f"🚀 Readout sweep ({config.bath.kind.value}, {len(config.eps_d_list)} amplitudes)...")
    setup = experiments.prepare_bath(config)
    cal = _calibration_from_args(args, ctx, setup)
    result = experiments.readout_sweep(config, setup, cal, jobs=config.output.jobs)
    ctx.write(result.to_frame(), "readout_sweep.csv")
    ctx.extra["omega_bar"] = cal.omega_bar
    _print_sweep(result)
    return 0


def run_lindblad(args, ctx: RunContext) -> int:
    config = ctx.config
    print("⚙️  Lindblad master equation sweep...")
    cal = None
    if args.omega_a0 is not None and args.omega_a1 is not None:
        cal = _calibration_from_args(args, ctx)
    result = experiments.lindblad_sweep(config, cal, jobs=config.output.jobs,
                                        lam=experiments.bath_reorganization(config))
    ctx.write(result.to_frame(), "lindblad_sweep.csv")
    _print_sweep(result)
    return 0


def run_rates(args, ctx: RunContext) -> int:
    table = experiments.analytic_rates(ctx.config)
    ctx.write(table, "rates.csv")
    params = CircuitParams.from_config(ctx.config.circuit)
    d_a = truncation_dims(0.0, params.kappa, None).d_a
    basis = dressed_basis(build_undriven_hamiltonian(params, d_a), d_a)
    ctx.write(dressed_spectrum_frame(basis), "dressed_spectrum.csv")
    ctx.extra["dispersive"] = is_dispersive(params)
    print("\n📋 Analytic rates (MHz):")
    for _, row in table.iterrows():
        print(f"  {row['rate']:<18} {row['MHz']:.4f}")
    return 0


def run_spectrum(args, ctx: RunContext) -> int:
    config = ctx.config
    print("🔬 Driven spectroscopy near the qubit frequency...")
    setup = experiments.prepare_bath(config)
    cal = _calibration_from_args(args, ctx, setup)
    result = experiments.driven_spectroscopy(config, setup, cal, jobs=config.output.jobs)
    spectra = [p.spectrum.to_frame().assign(eps_d=p.eps_d, nbar=p.nbar)
               for p in result.sweep.points if p.spectrum is not None]
    if spectra:
        ctx.write(pd.concat(spectra, ignore_index=True), "spectra.csv")
    ctx.write(result.overlay_frame(), "jt_overlay.csv")
    ctx.write(result.estimate_frame(), "stark_estimate.csv")
    print(result.estimate_frame().to_string(index=False))
    return 0


def run_excitation(args, ctx: RunContext) -> int:
    config = ctx.config
    print("🧪 Spurious excitation check from |0̄0⟩...")
    setup = None if args.lindblad_only else experiments.prepare_bath(config)
    result = experiments.excitation_check(config, setup, run_mps=not args.lindblad_only)
    ctx.write(result.to_frame(), "excitation.csv")
    print(result.to_frame().to_string(index=False))
    return 0


def run_convergence(args, ctx: RunContext) -> int:
    config = ctx.config
    print(f"🔁 Convergence check at eps_d = {args.eps_d} GHz...")
    setup = experiments.prepare_bath(config)
    cal = _calibration_from_args(args, ctx, setup)
    table = experiments.convergence_check(config, setup, args.eps_d, cal.omega_bar, jobs=config.output.jobs)
    ctx.write(table, "convergence.csv")
    print(table.to_string(index=False))
    return 0


COMMANDS = {
    "chain-coeffs": run_chain_coeffs,
    "reconstruct-sdf": run_reconstruct_sdf,
    "calibrate": run_calibrate,
    "free-decay": run_free_decay,
    "readout-sweep": run_readout_sweep,
    "lindblad": run_lindblad,
    "rates": run_rates,
    "spectrum": run_spectrum,
    "excitation": run_excitation,
    "convergence": run_convergence,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--preset", choices=["desk", "paper"], help="Scale preset")
    common.add_argument("--bath", choices=[k.value for k in BathKind], help="Bath kind")
    common.add_argument("--out", help="Output root (default: $READOUT_SIM_OUTPUT_ROOT or ./runs)")
    common.add_argument("--jobs", type=int, help="Parallel workers for sweeps (default: 1)")
    common.add_argument("--eps-d-list", help="Comma-separated drive amplitudes in GHz")
    common.add_argument("--chain-length", type=int, help="Override chain length N")
    common.add_argument("--swap-detuning", action="store_true", help="Use the Delta<0 configuration")
    common.add_argument("--log-level", help="Logging level (default: INFO)")

    calibrated = argparse.ArgumentParser(add_help=False)
    calibrated.add_argument("--omega-a0", type=float, help="Skip calibration: resonator peak for qubit in 0")
    calibrated.add_argument("--omega-a1", type=float, help="Skip calibration: resonator peak for qubit in 1")

    parser = argparse.ArgumentParser(
        description="readout-sim: dispersive qubit readout with structured baths (chain mapping + TDVP)",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Analytic rates for the flat bath
  python src/cli.py rates --bath flat --preset paper

  # Chain coefficients for the Ohmic bath at full scale
  python src/cli.py chain-coeffs --bath ohmic --preset paper

  # Desk-scale readout sweep on 4 workers
  python src/cli.py readout-sweep --config config/example.ini --jobs 4
        """
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    subparsers.add_parser("chain-coeffs", parents=[common], help="Export chain coefficients")

    sdf_parser = subparsers.add_parser("reconstruct-sdf", parents=[common], help="Reconstruct J from the chain")
    sdf_parser.add_argument("--eta", type=float, help="Broadening in GHz (default: 3x mean spacing)")
    sdf_parser.add_argument("--kernel", choices=[k.value for k in Kernel], default="gaussian")
    sdf_parser.add_argument("--grid-points", type=int, default=2000)

    cal_parser = subparsers.add_parser("calibrate", parents=[common], help="Calibrate omega_a0, omega_a1")
    cal_parser.add_argument("--photons", type=int, default=None, help="Initial photons (default: 2)")

    decay_parser = subparsers.add_parser("free-decay", parents=[common], help="Free decay and WW overlay")
    decay_parser.add_argument("--j", type=int, choices=[0, 1], default=0)
    decay_parser.add_argument("--n", type=int, default=1)
    decay_parser.add_argument("--kt-final", type=float, default=None)
    decay_parser.add_argument("--resume", help="Continue from an MPS checkpoint (same layout and dt)")

    subparsers.add_parser("readout-sweep", parents=[common, calibrated], help="Gamma10 vs drive amplitude")
    subparsers.add_parser("lindblad", parents=[common, calibrated], help="Master-equation sweep")
    subparsers.add_parser("rates", parents=[common], help="Analytic FGR and Lindblad rates")
    subparsers.add_parser("spectrum", parents=[common, calibrated], help="Driven spectroscopy near omega_q")

    exc_parser = subparsers.add_parser("excitation", parents=[common], help="Spurious excitation check")
    exc_parser.add_argument("--lindblad-only", action="store_true")

    conv_parser = subparsers.add_parser("convergence", parents=[common, calibrated],
                                        help="Doubled chi and halved dt")
    conv_parser.add_argument("--eps-d", type=float, default=0.05)
    return parser


def config_from_args(args) -> RunConfig:
    overrides = {
        "bath.kind": args.bath,
        "run.preset": args.preset,
        "run.eps_d_list": args.eps_d_list,
        "output.out_dir": args.out,
        "output.jobs": args.jobs,
        "output.log_level": args.log_level,
        "evolution.chain_length": args.chain_length,
    }
    config = load_run_config(args.config, overrides)
    if args.swap_detuning:
        config = replace(config, circuit=swapped_detuning(config.circuit))
    if config.output.jobs < 1:
        raise ConfigValidationError(f"--jobs must be >= 1, got {config.output.jobs}")
    is_valid, report = InputValidator().validate_run_config(config)
    if not is_valid:
        raise ConfigValidationError(f"{report['reason']} ({report['suggestion']})")
    if report["status"] == "warning":
        logger.log_numerical_alert("config_warning", report)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    """
    Función principal del CLI. Códigos de salida: 2 config, 3 numérico, 4 ajuste.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command not in COMMANDS:
        parser.print_help()
        return 1

    ctx = None
    try:
        config = config_from_args(args)
        logger.set_level(config.output.log_level)
        ctx = RunContext(args.command, config)
        logger.log_run_start(args.command, _jsonable(config))
        code = COMMANDS[args.command](args, ctx)
        ctx.finish()
        print(f"\n✅ {args.command} completed! Outputs in {ctx.out_dir}")
        return code
    except ReadoutSimError as e:
        logger.log_error(e.category, str(e), e.diagnostics)
        if isinstance(e, ConfigValidationError) and e.missing_keys:
            print(f"missing_keys={','.join(e.missing_keys)}", file=sys.stderr)
        print(f"error_category={e.category} message={e}", file=sys.stderr)
        if ctx is not None:
            ctx.finish()
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
