# polar_processor.py

"""
Main entry point for the non-binary polar coding toolkit.
Processes command-line arguments and delegates to the appropriate handlers.
Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

import argparse
import functools
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

# --- Core Imports ---
from polar_utils.nonbinary_polar.core.exceptions import (
    CacheError, ConfigurationError, KernelError, PolarSystemError, SearchError, SignalSetError,
)
from polar_utils.nonbinary_polar.core.kernels import (
    Kernel, KernelSchedule, SCHEDULE_VARIANTS, builtin_kernel, schedule_from_names, schedule_variant,
    standard_kernel,
)
from polar_utils.nonbinary_polar.core.polar_codec import CodeConfig
from polar_utils.nonbinary_polar.core.signal_sets import SignalSet, make_psk, min_distance, signal_set_by_name

# --- Analysis Imports ---
from polar_utils.nonbinary_polar.analysis.awgn_sim import (
    NoiseModel, estimate_reliabilities, info_symbols_for_rate, profile_distance, run_fer, select_frozen_set,
    sorted_profile, unpolarized_count,
)
from polar_utils.nonbinary_polar.analysis.distance_analysis import (
    asymptotic_equidistant_dmin, bad_channel_spectrum, bound_comparison_almost_equidistant, bound_curve,
    conservation_check, equidistant_dmin_bound, good_channel_spectrum, is_equidistant, psk_standard_dmin,
    summary_row,
)
from polar_utils.nonbinary_polar.analysis.kernel_search import search_permutations, weakest_reference_spectrum

# --- IO Imports ---
from polar_utils.nonbinary_polar.io.report_io import (
    ExperimentSpec, json_payload, load_frozen_set, load_spec_file, write_csv, write_json,
)

# --- Utility Imports ---
from polar_utils.nonbinary_polar.utils.cache_manager import cache_manager, clear_all_caches
from polar_utils.nonbinary_polar.utils.config_manager import ConfigManager
from polar_utils.nonbinary_polar.utils.path_utils import get_project_root, normalize_path, resolve_output_path

# Configure logging
logger = logging.getLogger(__name__)

# --- Constants ---
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
USAGE_ERRORS = (SignalSetError, KernelError, ConfigurationError, SearchError, CacheError)
DEFAULT_BOUND_GRID = [float(s) for s in range(0, 13)]
SPEC_ALIASES = {"snr_grid": "snr", "set_name": "set"}  # ExperimentSpec field -> CLI option
CHANNEL_STAGE_PREFIX = "channel-stage-only-"
SIMULATION_LOGGERS = (
    'polar_utils.nonbinary_polar.analysis.awgn_sim',
    'polar_utils.nonbinary_polar.utils.batch_processor',
)


class UsageError(Exception):
    """Bad or missing command-line options (exit code 1)."""
    pass


class PolarArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- Helper Functions ---
def _cli_handler(func: Callable[[argparse.Namespace], int]) -> Callable[[argparse.Namespace], int]:
    """Map toolkit exceptions to exit codes and report them on stderr."""
    @functools.wraps(func)
    def wrapper(args: argparse.Namespace) -> int:
        try:
            return func(args)
        except (UsageError,) + USAGE_ERRORS as e:
            logger.error(str(e))
            print(f"Error: {e}", file=sys.stderr)
            return EXIT_USAGE
        except (PolarSystemError, OSError) as e:
            logger.error(f"{args.command} failed: {e}", exc_info=True)
            print(f"Error: {e}", file=sys.stderr)
            return EXIT_RUNTIME
    return wrapper


def _apply_spec(args: argparse.Namespace, defaults: Dict[str, Any]) -> Dict[str, Any]:
    """
    Fill options not given on the command line from --spec, then from defaults.
    Returns the spec file contents (empty without --spec).
    """
    spec = load_spec_file(args.spec) if getattr(args, "spec", None) else {}
    for canonical_key, option in SPEC_ALIASES.items():
        if canonical_key in spec and option not in spec:
            spec[option] = spec[canonical_key]
    for key in set(defaults) | set(spec):
        if key in ("command", "spec", "func"):
            continue
        if getattr(args, key, None) is None:
            if key in spec:
                setattr(args, key, spec[key])
            elif key in defaults:
                setattr(args, key, defaults[key])
    return spec


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"Missing required option(s) for {args.command}: {', '.join('--' + m.replace('_', '-') for m in missing)}")


def _as_list(value: Any) -> List[Any]:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _load_set(name_or_path: str, q: Optional[int], es: float) -> SignalSet:
    if name_or_path.lower().endswith(".json"):
        with open(normalize_path(name_or_path), 'r', encoding='utf-8') as f:
            sset = SignalSet.from_dict(json.load(f))
        if q is not None and sset.q != q:
            raise SignalSetError(f"Signal set file {name_or_path} has q={sset.q}, expected {q}")
        return sset
    return signal_set_by_name(name_or_path, q, es)


def _load_kernel(name_or_path: str, q: Optional[int]) -> Kernel:
    if name_or_path.lower().endswith(".json"):
        with open(normalize_path(name_or_path), 'r', encoding='utf-8') as f:
            kernel = Kernel.from_dict(json.load(f))
        if q is not None and kernel.q != q:
            raise KernelError(f"Kernel file {name_or_path} has q={kernel.q}, expected {q}")
        return kernel
    return builtin_kernel(name_or_path, q)


def _resolve_pair(kernel_name: str, set_name: str, q: Optional[int], es: float) -> Tuple[Kernel, SignalSet]:
    """Resolve a kernel and a signal set that must agree on q; either side may supply q."""
    sset: Optional[SignalSet] = None
    try:
        sset = _load_set(set_name, q, es)
    except SignalSetError:
        if q is not None:
            raise
    kernel = _load_kernel(kernel_name, q if q is not None else (sset.q if sset else None))
    if sset is None:
        sset = _load_set(set_name, kernel.q, es)
    if kernel.q != sset.q:
        raise KernelError(f"Kernel '{kernel.label}' (q={kernel.q}) does not match signal set '{sset.label}' (q={sset.q})")
    return kernel, sset


def _resolve_schedule(args: argparse.Namespace, q: int, n: int) -> KernelSchedule:
    names = _as_list(args.schedule) or _as_list(args.kernel)
    if not names:
        raise UsageError(f"{args.command} needs --kernel or --schedule")
    if len(names) == 1:
        return KernelSchedule.uniform(_load_kernel(str(names[0]), q), n)
    if len(names) != n:
        raise UsageError(f"--schedule lists {len(names)} kernels but N={2 ** n} needs {n}")
    return schedule_from_names([str(s) for s in names], q)


def _block_exponent(N: int) -> int:
    N = int(N)
    if N < 2 or N & (N - 1):
        raise UsageError(f"N must be a power of two >= 2, got {N}")
    return N.bit_length() - 1


def _positive_trials(trials: Any) -> int:
    trials = int(trials)
    if trials < 1:
        raise UsageError(f"--trials must be at least 1, got {trials}")
    return trials


def _output_path(args: argparse.Namespace, default_name: str) -> str:
    if getattr(args, "output", None):
        return resolve_output_path(str(args.output), os.getcwd())
    return resolve_output_path(default_name, ConfigManager().get_path("output_dir"))


def _experiment(args: argparse.Namespace, **fields: Any) -> ExperimentSpec:
    known = {k: fields.pop(k) for k in ("q", "set_name", "kernel", "schedule", "N", "snr_grid", "trials") if k in fields}
    return ExperimentSpec(command=args.command, seed=int(args.seed), extra=fields, **known)


def _workers(args: argparse.Namespace) -> Optional[int]:
    workers = getattr(args, "workers", None)
    return int(workers) if workers is not None else ConfigManager().get_compute_setting("max_workers")


def _show_progress() -> bool:
    return bool(ConfigManager().get_compute_setting("show_progress", True))


# --- Command Handlers ---
@_cli_handler
def handle_analyze_kernel(args: argparse.Namespace) -> int:
    """Print good/bad spectra, the equidistant verdict and the conservation / bound checks."""
    _apply_spec(args, {"set": "psk", "es": 1.0, "seed": 0})
    _require(args, "kernel")
    kernel, sset = _resolve_pair(args.kernel, args.set, args.q, float(args.es))
    good = good_channel_spectrum(kernel, sset)
    bad = bad_channel_spectrum(kernel, sset)
    weakest = weakest_reference_spectrum(kernel, sset)
    standard_bad = bad_channel_spectrum(standard_kernel(sset.q), sset)
    bound = equidistant_dmin_bound(sset)
    conserved = conservation_check(kernel, sset)
    equidistant = is_equidistant(good)

    print(f"Kernel '{kernel.label}' over '{sset.label}' (q={sset.q}, es={sset.es})")
    print(f"  good spectrum : {good.describe()}{'' if good.uniform else '  (non-uniform; weakest ' + weakest.describe() + ')'}")
    print(f"  bad spectrum  : {bad.describe()}")
    print(f"  equidistant   : {equidistant}")
    print(f"  conservation  : {conserved}")
    print(f"  d_min bound   : {good.worst_dmin:.6f} <= {bound:.6f} ({good.worst_dmin <= bound + 1e-9})")
    print(f"  bad d_min     : {bad.d_min:.6f} (standard kernel {standard_bad.d_min:.6f}, set {min_distance(sset):.6f})")
    print(f"  q={sset.q}: {summary_row(weakest)}")

    spec = _experiment(args, q=sset.q, set_name=sset.label, kernel=kernel.label)
    analysis = {
        "kernel": kernel.to_dict(), "set": sset.to_dict(),
        "good": good.to_dict(), "bad": bad.to_dict(), "weakestGood": weakest.to_dict(),
        "equidistant": equidistant, "conservation": conserved, "dminBound": bound,
        "standardBadDmin": standard_bad.d_min, "summaryRow": f"q={sset.q}: {summary_row(weakest)}",
    }
    if args.output:
        write_json(_output_path(args, f"analyze_{kernel.label}_{sset.label}.json"), analysis, spec.config_hash, args.seed)
    else:
        print(json.dumps(json_payload(analysis, spec.config_hash, args.seed), indent=2))
    return EXIT_OK


@_cli_handler
def handle_search_kernel(args: argparse.Namespace) -> int:
    """Exhaustive permutation-kernel search."""
    _apply_spec(args, {"set": "psk", "es": 1.0, "seed": 0, "full_space": False})
    _require(args, "q")
    sset = _load_set(args.set, int(args.q), float(args.es))
    report = search_permutations(sset, full_space=bool(args.full_space), objective=args.objective,
                                 objective_snr_db=args.objective_snr, max_workers=_workers(args),
                                 show_progress=_show_progress())
    print(f"Searched {report.search_space_size} kernels for q={report.q} over '{report.set_label}'")
    print(f"  best spectrum     : {report.best_spectrum.describe()}")
    print(f"  d_min bound       : {report.dmin_bound:.6f}")
    print(f"  equidistant found : {report.equidistant_found}")
    print(f"  maximizers ({len(report.best_permutations)}):")
    for pi in report.best_permutations:
        print(f"    pi = {pi}")
    spec = _experiment(args, q=report.q, set_name=sset.label, objective=report.objective,
                       objective_snr_db=report.objective_snr_db, full_space=bool(args.full_space))
    write_json(_output_path(args, f"search_q{report.q}_{sset.label}.json"), report.to_dict(), spec.config_hash, args.seed)
    return EXIT_OK


def _construct(cfg: CodeConfig, sset: SignalSet, snr_db: float, trials: int, seed: int, K: int,
               workers: Optional[int]):
    profile = estimate_reliabilities(cfg, sset, NoiseModel(sset.es, snr_db), trials, seed,
                                     max_workers=workers, show_progress=_show_progress())
    frozen = select_frozen_set(profile, K)
    return profile, cfg.with_frozen(frozen)


@_cli_handler
def handle_construct(args: argparse.Namespace) -> int:
    """Monte-Carlo code construction: reliability profile plus frozen set."""
    config = ConfigManager()
    _apply_spec(args, {"set": "psk", "es": 1.0, "seed": config.get_simulation_setting("default_seed"),
                       "snr": config.get_simulation_setting("design_snr_db"),
                       "trials": config.get_simulation_setting("construction_trials")})
    _require(args, "q", "N")
    q, N = int(args.q), int(args.N)
    n = _block_exponent(N)
    trials = _positive_trials(args.trials)
    snr_db = float(_as_list(args.snr)[0])
    sset = _load_set(args.set, q, float(args.es))
    cfg = CodeConfig(q=q, schedule=_resolve_schedule(args, q, n))
    K = int(args.K) if args.K is not None else info_symbols_for_rate(N, q)

    profile, code = _construct(cfg, sset, snr_db, trials, int(args.seed), K, _workers(args))
    spec = _experiment(args, q=q, set_name=sset.label, schedule=cfg.schedule.names, N=N, snr_grid=[snr_db],
                       trials=trials, K=K)
    base = args.output or os.path.join(config.get_path("output_dir"), f"construct_q{q}_N{N}_{cfg.schedule.names[-1]}")
    base = os.path.splitext(base)[0]
    frozen_mask = code.frozen_mask()
    write_csv(resolve_output_path(base + "_reliability.csv", os.getcwd()), ["index", "error_rate", "frozen"],
              [(i, e, int(frozen_mask[i])) for i, e in profile.rows()], spec.config_hash, args.seed)
    write_json(resolve_output_path(base + "_code.json", os.getcwd()),
               {**code.to_dict(), "K": code.K, "design_snr_db": snr_db, "trials": trials,
                "set": sset.label, "unpolarized": unpolarized_count(profile)},
               spec.config_hash, args.seed)
    print(f"Constructed N={N}, K={code.K}, q={q} code at {snr_db} dB from {trials} trials "
          f"({unpolarized_count(profile)} unpolarized indices)")
    print(f"Outputs: {base}_reliability.csv, {base}_code.json")
    return EXIT_OK


@_cli_handler
def handle_simulate(args: argparse.Namespace) -> int:
    """FER/SER sweep over an SNR grid."""
    config = ConfigManager()
    _apply_spec(args, {"set": "psk", "es": 1.0, "seed": config.get_simulation_setting("default_seed"),
                       "design_snr": config.get_simulation_setting("design_snr_db"),
                       "construction_trials": config.get_simulation_setting("construction_trials")})
    _require(args, "q", "N", "snr", "trials")
    q, N = int(args.q), int(args.N)
    n = _block_exponent(N)
    trials = _positive_trials(args.trials)
    grid = [float(s) for s in _as_list(args.snr)]
    if not grid:
        raise UsageError("--snr needs at least one value")
    seed = int(args.seed)
    sset = _load_set(args.set, q, float(args.es))
    cfg = CodeConfig(q=q, schedule=_resolve_schedule(args, q, n))

    if args.frozen:
        cfg = cfg.with_frozen(load_frozen_set(args.frozen))
    else:
        K = int(args.K) if args.K is not None else info_symbols_for_rate(N, q)
        logger.info(f"No frozen set given; constructing K={K} at {args.design_snr} dB")
        _, cfg = _construct(cfg, sset, float(args.design_snr), _positive_trials(args.construction_trials),
                            seed, K, _workers(args))

    reports = []
    for snr_db in grid:
        reports.append(run_fer(cfg, sset, NoiseModel(sset.es, snr_db), trials, seed,
                               max_workers=_workers(args), show_progress=_show_progress()))
        r = reports[-1]
        print(f"  {snr_db:6.2f} dB: FER {r.fer:.4e} +/- {r.fer_ci:.1e}, SER {r.ser:.4e} ({r.frame_errors}/{r.trials})")

    spec = _experiment(args, q=q, set_name=sset.label, schedule=cfg.schedule.names, N=N, snr_grid=grid,
                       trials=trials, frozen=sorted(cfg.frozen))
    path = _output_path(args, f"fer_q{q}_N{N}_K{cfg.K}_{cfg.schedule.names[-1]}.csv")
    header = ["snr_db", "trials", "frame_errors", "fer", "ci95", "symbol_errors", "ser", "ser_ci95"]
    rows = [(r.snr_db, r.trials, r.frame_errors, r.fer, r.fer_ci, r.symbol_errors, r.ser, r.ser_ci) for r in reports]
    if args.per_index:
        header += [f"ser_index_{i}" for i in range(N)]
        rows = [row + tuple(r.index_error_rates().tolist()) for row, r in zip(rows, reports)]
    write_csv(path, header, rows, spec.config_hash, seed)
    if args.report_json:
        write_json(resolve_output_path(args.report_json, os.getcwd()),
                   {"reports": [r.to_dict() for r in reports]}, spec.config_hash, seed)
    print(f"FER results written to {path}")
    return EXIT_OK


@_cli_handler
def handle_bounds(args: argparse.Namespace) -> int:
    """Union-bound curve of the good channel, with the 8-PSK almost-equidistant comparison at q=8."""
    _apply_spec(args, {"set": "psk", "es": 1.0, "seed": 0, "snr": DEFAULT_BOUND_GRID})
    _require(args, "kernel")
    kernel, sset = _resolve_pair(args.kernel, args.set, args.q, float(args.es))
    grid = [float(s) for s in _as_list(args.snr)]
    if not grid:
        raise UsageError("--snr needs at least one value")
    spectrum = weakest_reference_spectrum(kernel, sset)
    curve = bound_curve(spectrum, grid)
    header = ["snr_db", "union_bound"]
    rows: List[Tuple[Any, ...]] = list(curve)
    if sset.q == 8:
        comparison = bound_comparison_almost_equidistant(grid)
        header += ["almost_equidistant", "equidistant", "ratio"]
        rows = [row + (c["almost_equidistant"], c["equidistant"], c["ratio"]) for row, c in zip(rows, comparison)]
    spec = _experiment(args, q=sset.q, set_name=sset.label, kernel=kernel.label, snr_grid=grid)
    path = _output_path(args, f"bounds_{kernel.label}_{sset.label}.csv")
    write_csv(path, header, rows, spec.config_hash, args.seed)
    print(f"Spectrum {spectrum.describe()}; bound curve with {len(rows)} points written to {path}")
    return EXIT_OK


@_cli_handler
def handle_polarization_speed(args: argparse.Namespace) -> int:
    """Sorted reliability curves and unpolarized-index counts per schedule variant."""
    config = ConfigManager()
    _apply_spec(args, {"set": "psk", "es": 1.0, "seed": config.get_simulation_setting("default_seed"),
                       "snr": config.get_simulation_setting("design_snr_db"),
                       "variants": list(SCHEDULE_VARIANTS)})
    _require(args, "q", "N", "trials")
    q, N = int(args.q), int(args.N)
    n = _block_exponent(N)
    trials = _positive_trials(args.trials)
    snr_db = float(_as_list(args.snr)[0])
    seed = int(args.seed)
    variants = [str(v) for v in _as_list(args.variants)]
    sset = _load_set(args.set, q, float(args.es))
    schedules = {v: schedule_variant(v, q, n, args.proposed) for v in variants}
    low, high = config.get_polarization_window()

    spec = _experiment(args, q=q, set_name=sset.label, N=N, snr_grid=[snr_db], trials=trials,
                       variants=variants, proposed=args.proposed)
    out_dir = args.output or config.get_path("output_dir")
    profiles = {}
    for variant, schedule in schedules.items():
        profile = estimate_reliabilities(CodeConfig(q=q, schedule=schedule), sset, NoiseModel(sset.es, snr_db),
                                         trials, seed, max_workers=_workers(args), show_progress=_show_progress())
        order = np.argsort(profile.estimates, kind="stable")
        curve = sorted_profile(profile)
        write_csv(resolve_output_path(f"polarization_q{q}_N{N}_{variant}.csv", out_dir),
                  ["rank", "error_rate", "index"],
                  [(rank, float(e), int(idx)) for rank, (e, idx) in enumerate(zip(curve, order))],
                  spec.config_hash, seed)
        profiles[variant] = profile
        print(f"  {variant:<30} unpolarized indices in ({low}, {high}): {unpolarized_count(profile, low, high)}")

    summary = []
    for variant, profile in profiles.items():
        gap: Any = ""
        uniform_variant = variant.replace(CHANNEL_STAGE_PREFIX, "all-", 1)
        if variant.startswith(CHANNEL_STAGE_PREFIX) and uniform_variant in profiles:
            gap = profile_distance(profile, profiles[uniform_variant])
            print(f"  {variant} vs {uniform_variant}: largest sorted-profile gap {gap:.4f}")
        summary.append((variant, "/".join(schedules[variant].names), unpolarized_count(profile, low, high), gap))
    write_csv(resolve_output_path(f"polarization_q{q}_N{N}_summary.csv", out_dir),
              ["variant", "stages", "unpolarized_count", "max_gap_vs_all"], summary, spec.config_hash, seed)
    return EXIT_OK


@_cli_handler
def handle_asymptotics(args: argparse.Namespace) -> int:
    """Equidistant d_min bound over q-PSK next to the standard kernel's d_min."""
    _apply_spec(args, {"q_max": 16, "es": 1.0, "seed": 0})
    q_max = int(args.q_max)
    if q_max < 2:
        raise UsageError(f"--q-max must be at least 2, got {q_max}")
    es = float(args.es)
    rows = []
    for q in range(2, q_max + 1):
        rows.append((q, equidistant_dmin_bound(make_psk(q, es)), asymptotic_equidistant_dmin(q, es),
                     psk_standard_dmin(q, es)))
    for q, bound, closed, standard in rows[:min(len(rows), 20)]:
        print(f"  q={q:<4} equidistant d_min {bound:.4f} (closed form {closed:.4f}), standard {standard:.4f}")
    if args.output:
        spec = _experiment(args, q_max=q_max, es=es)
        write_csv(_output_path(args, "asymptotics.csv"), ["q", "equidistant_dmin", "closed_form", "standard_dmin"],
                  rows, spec.config_hash, args.seed)
    return EXIT_OK


def handle_show_config(args: argparse.Namespace) -> int:
    config_manager = ConfigManager()
    print(json.dumps(config_manager.config, indent=2))
    return EXIT_OK


def handle_update_config(args: argparse.Namespace) -> int:
    """Handle the update-config command."""
    config_manager = ConfigManager()
    try:
        try: value_parsed = json.loads(args.value)
        except json.JSONDecodeError: value_parsed = args.value
        success = config_manager.update_config_setting(args.key, value_parsed)
        if success: print(f"Updated config: {args.key} = {value_parsed}"); return EXIT_OK
        else: print(f"Error: Failed update config (key '{args.key}' invalid?)."); return EXIT_USAGE
    except PolarSystemError as e: logger.exception(f"Error update_config: {e}"); print(f"Error: {e}"); return EXIT_USAGE


def handle_reset_config(args: argparse.Namespace) -> int:
    """Handle the reset-config command."""
    config_manager = ConfigManager()
    success = config_manager.reset_to_defaults()
    if success: print("Config reset to defaults."); return EXIT_OK
    print("Error: Failed reset config."); return EXIT_RUNTIME


@_cli_handler
def handle_clear_caches(args: argparse.Namespace) -> int:
    """Report cache usage, then drop entries matching --pattern (all entries without it)."""
    for name, stats in cache_manager.stats().items():
        print(f"  {name:<20} {stats['size']:>6} entries, {stats['hits']} hits, {stats['misses']} misses")
    if args.pattern:
        print(f"Invalidated {cache_manager.invalidate(args.pattern)} entries matching '{args.pattern}'.")
    else:
        clear_all_caches(); print("All caches cleared.")
    return EXIT_OK


# --- Parser ---
def _add_common(p: argparse.ArgumentParser, output_help: str = "Output file path") -> None:
    p.add_argument("--spec", help="JSON experiment spec; fills options not given on the command line")
    p.add_argument("--seed", type=int, default=None, help="Master seed (default from config, 0)")
    p.add_argument("--output", "-o", default=None, help=output_help)


def _add_code_options(p: argparse.ArgumentParser, kernels: bool = True) -> None:
    p.add_argument("--q", type=int, default=None, help="Alphabet size")
    p.add_argument("--set", default=None, help="Signal set name (psk, psk8, rotated4) or JSON file (default psk)")
    p.add_argument("--es", type=float, default=None, help="Signal energy (default 1)")
    p.add_argument("--N", type=int, default=None, help="Block length (power of two)")
    p.add_argument("--workers", type=int, default=None, help="Worker threads")
    if kernels:
        p.add_argument("--kernel", default=None, help="Kernel used at every stage")
        p.add_argument("--schedule", nargs='+', default=None, help="Per-stage kernels, stage 1 (inputs) first")
        p.add_argument("--K", type=int, default=None, help="Information symbols (default floor(N / log2 q))")


def build_parser() -> argparse.ArgumentParser:
    parser = PolarArgumentParser(description="Non-binary polar coding toolkit CLI")
    subparsers = parser.add_subparsers(dest="command", help="Available commands", required=True,
                                       parser_class=PolarArgumentParser)

    # --- Analysis Commands ---
    analyze_parser = subparsers.add_parser("analyze-kernel", help="Distance spectra and properties of a kernel")
    analyze_parser.add_argument("--kernel", default=None, help="Built-in kernel name or kernel JSON file")
    analyze_parser.add_argument("--set", default=None, help="Signal set name or JSON file (default psk)")
    analyze_parser.add_argument("--q", type=int, default=None, help="Alphabet size for parametric names")
    analyze_parser.add_argument("--es", type=float, default=None, help="Signal energy (default 1)")
    _add_common(analyze_parser, "Save the analysis JSON here instead of printing it")
    analyze_parser.set_defaults(func=handle_analyze_kernel)

    search_parser = subparsers.add_parser("search-kernel", help="Exhaustive permutation-kernel search")
    search_parser.add_argument("--q", type=int, default=None, help="Alphabet size (<= search.max_exhaustive_q)")
    search_parser.add_argument("--set", default=None, help="Signal set name or JSON file (default psk)")
    search_parser.add_argument("--es", type=float, default=None, help="Signal energy (default 1)")
    search_parser.add_argument("--full-space", action="store_true", default=None, help="Do not fix pi(0) = 0")
    search_parser.add_argument("--objective", choices=["spectrum", "union_bound"], default=None, help="Ranking objective")
    search_parser.add_argument("--objective-snr", type=float, default=None, help="SNR in dB for the union_bound objective")
    search_parser.add_argument("--workers", type=int, default=None, help="Worker threads")
    _add_common(search_parser, "SearchReport JSON path")
    search_parser.set_defaults(func=handle_search_kernel)

    bounds_parser = subparsers.add_parser("bounds", help="Union-bound curve over an SNR grid")
    bounds_parser.add_argument("--kernel", default=None, help="Built-in kernel name or kernel JSON file")
    bounds_parser.add_argument("--set", default=None, help="Signal set name or JSON file (default psk)")
    bounds_parser.add_argument("--q", type=int, default=None, help="Alphabet size for parametric names")
    bounds_parser.add_argument("--es", type=float, default=None, help="Signal energy (default 1)")
    bounds_parser.add_argument("--snr", type=float, nargs='+', default=None, help="SNR grid in dB (default 0..12)")
    _add_common(bounds_parser, "CSV path")
    bounds_parser.set_defaults(func=handle_bounds)

    asym_parser = subparsers.add_parser("asymptotics", help="Equidistant d_min over q-PSK as q grows")
    asym_parser.add_argument("--q-max", type=int, default=None, help="Largest q (default 16)")
    asym_parser.add_argument("--es", type=float, default=None, help="Signal energy (default 1)")
    _add_common(asym_parser, "CSV path (printed only when omitted)")
    asym_parser.set_defaults(func=handle_asymptotics)

    # --- Simulation Commands ---
    construct_parser = subparsers.add_parser("construct", help="Monte-Carlo code construction")
    _add_code_options(construct_parser)
    construct_parser.add_argument("--snr", type=float, default=None, help="Design SNR in dB (default 2)")
    construct_parser.add_argument("--trials", type=int, default=None, help="Construction trials")
    _add_common(construct_parser, "Output path prefix")
    construct_parser.set_defaults(func=handle_construct)

    simulate_parser = subparsers.add_parser("simulate", help="FER/SER simulation over an SNR grid")
    _add_code_options(simulate_parser)
    simulate_parser.add_argument("--snr", type=float, nargs='+', default=None, help="SNR grid in dB")
    simulate_parser.add_argument("--trials", type=int, default=None, help="Frames per SNR point")
    simulate_parser.add_argument("--frozen", default=None, help="Frozen set file (construct output); constructed on the fly when omitted")
    simulate_parser.add_argument("--design-snr", type=float, default=None, help="Design SNR for on-the-fly construction")
    simulate_parser.add_argument("--construction-trials", type=int, default=None, help="Trials for on-the-fly construction")
    simulate_parser.add_argument("--per-index", action="store_true", default=None, help="Add per-index SER columns")
    simulate_parser.add_argument("--report-json", default=None, help="Also write full reports as JSON")
    _add_common(simulate_parser, "CSV path")
    simulate_parser.set_defaults(func=handle_simulate)

    speed_parser = subparsers.add_parser("polarization-speed", help="Sorted reliability curves per schedule variant")
    _add_code_options(speed_parser, kernels=False)
    speed_parser.add_argument("--snr", type=float, default=None, help="Design SNR in dB (default 2)")
    speed_parser.add_argument("--trials", type=int, default=None, help="Trials per variant")
    speed_parser.add_argument("--variants", nargs='+', choices=list(SCHEDULE_VARIANTS), default=None, help="Schedule variants")
    speed_parser.add_argument("--proposed", default=None, help="Kernel used by the *-proposed variants")
    _add_common(speed_parser, "Output directory")
    speed_parser.set_defaults(func=handle_polarization_speed)

    # --- Utility Commands ---
    show_config_parser = subparsers.add_parser("show-config", help="Print the active configuration")
    show_config_parser.set_defaults(func=handle_show_config)

    update_config_parser = subparsers.add_parser("update-config", help="Update a config setting")
    update_config_parser.add_argument("key", help="Config key path (e.g., 'simulation.trial_block')")
    update_config_parser.add_argument("value", help="New value (JSON parse attempted)")
    update_config_parser.set_defaults(func=handle_update_config)

    reset_config_parser = subparsers.add_parser("reset-config", help="Reset config to defaults")
    reset_config_parser.set_defaults(func=handle_reset_config)

    clear_caches_parser = subparsers.add_parser("clear-caches", help="Clear all internal caches")
    clear_caches_parser.add_argument("--pattern", default=None, help="Only drop entries whose key matches this regex")
    clear_caches_parser.set_defaults(func=handle_clear_caches)

    return parser


def setup_logging() -> None:
    """Debug log to debug.txt, simulation records to simulation.log, INFO to the console."""
    log_formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    root_logger = logging.getLogger(); root_logger.setLevel(logging.DEBUG)
    try:
        log_file_path = normalize_path(os.path.join(get_project_root(), 'debug.txt'))
        file_handler = logging.FileHandler(log_file_path, mode='w')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(log_formatter)
        root_logger.addHandler(file_handler)
    except OSError as e_fh: print(f"Error setting up file logger: {e_fh}", file=sys.stderr)

    try:
        simulation_log_path = normalize_path(os.path.join(get_project_root(), 'simulation.log'))
        simulation_handler = logging.FileHandler(simulation_log_path, mode='w')
        simulation_handler.setLevel(logging.DEBUG)
        simulation_handler.setFormatter(log_formatter)
        class SimulationLogFilter(logging.Filter):
            def filter(self, record):
                return record.name.startswith(SIMULATION_LOGGERS)
        simulation_handler.addFilter(SimulationLogFilter())
        root_logger.addHandler(simulation_handler)
    except OSError as e_sh: print(f"Error setting up simulation logger: {e_sh}", file=sys.stderr)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
    root_logger.addHandler(console_handler)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments and dispatch to handlers."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if argv is None:
        setup_logging()
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
