"""
Subcommands: simulate, snr, recover, selftest, gradcheck
Each takes a resolved Config and returns the process exit code
"""

import logging
import os
from itertools import groupby
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional

import imaging
from cli import image_io, results
from config import Config
from errors import ConfigError, HprError
from harness import ExperimentSpec, ImageTask, recover_image, run_snr_curve, run_sweep
from selftest import CheckResult, run_gradcheck, run_selftest
from solvers import SolverConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_PARTIAL = 3

SEED_ENV = "HPR_SEED"


def build_config(path: Optional[str] = None, overrides: Iterable[str] = (), seed: Optional[int] = None,
                 out: Optional[str] = None, threads: Optional[int] = None, solver: Optional[str] = None,
                 model: Optional[str] = None, verbosity: Optional[str] = None) -> Config:
    """Flags > --set > config file > HPR_SEED > defaults"""
    config = Config(path)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed and "run.seed" not in config.file_keys:
        config.set("run.seed", env_seed)
    config.apply_overrides(overrides)

    flags = {
        "run.seed": seed,
        "run.out": out,
        "run.threads": threads,
        "solver.name": solver,
        "model.kind": model,
        "run.verbosity": verbosity,
    }
    for key, value in flags.items():
        if value is not None:
            config.set(key, value)

    if config.get("run.seed") < 0:
        raise ConfigError(f"Seed must be a nonnegative integer, got {config.get('run.seed')}")
    return config


def solver_config(config: Config) -> SolverConfig:
    values = {key: value for key, value in config.section("solver").items() if key != "name"}
    values["seed"] = config.get("run.seed")
    try:
        return SolverConfig.from_mapping(values)
    except HprError as e:
        raise ConfigError(f"Invalid solver settings: {e}") from e


def experiment_spec(config: Config) -> ExperimentSpec:
    sweep = config.section("sweep")
    return ExperimentSpec(
        solver=config.get("solver.name"),
        model=config.get("model.kind"),
        n=config.get("model.n"),
        m_over_n=sweep["m_over_n"],
        snr_db=sweep["snr_db"],
        trials=sweep["trials"],
        success_threshold=sweep["success_threshold"],
        alphabet=config.get("model.alphabet"),
        window=config.get("model.window"),
        outliers=sweep["outliers"],
        outlier_factor=sweep["outlier_factor"],
        seed=config.get("run.seed"),
        solver_config=solver_config(config),
    )


def load_input(config: Config):
    """Image named by recover.input, else the synthetic picture named by recover.synthetic"""
    source = config.get("recover.input")
    if source:
        return image_io.read_image(source)
    size = config.get("recover.size")
    if size < 2:
        raise ConfigError(f"recover.size must be at least 2, got {size}")
    kind = config.get("recover.synthetic")
    if kind == "rgb":
        return imaging.synthetic_rgb(size)
    if kind == "msi":
        return imaging.synthetic_msi(size)
    raise ConfigError(f"Unknown synthetic image {kind!r}, expected rgb or msi")


def image_task(config: Config, image) -> ImageTask:
    recover = config.section("recover")
    return ImageTask(
        image=image,
        patch=recover["patch"],
        m_over_n=recover["m_over_n"],
        solver=config.get("solver.name"),
        model=recover["model"] or None,
        alphabet=recover["alphabet"],
        seed=config.get("run.seed"),
        oracle=recover["oracle"],
        peak=recover["peak"],
        solver_config=solver_config(config),
    )


def _output_dir(config: Config) -> Path:
    out = Path(config.get("run.out"))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"Cannot create output directory {out}: {e}") from e
    return out


def _sweep(config: Config, runner: Callable, filename: str) -> int:
    spec = experiment_spec(config)
    out = _output_dir(config)
    records = runner(spec, threads=config.get("run.threads"), timing=config.get("run.timing"))
    path = results.write_sweep_csv(out / filename, records)
    results.write_manifest(out, config)
    print(f"✅ {len(records)} rows written to {path}")

    failed = [r for r in records if r.status == "failed"]
    if failed:
        print(f"❌ {len(failed)} of {len(records)} cells had failing trials; partial results kept")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_simulate(config: Config) -> int:
    """Phase-transition sweep over m/n (and SNR) to phase_transition.csv"""
    return _sweep(config, run_sweep, results.PHASE_TRANSITION_FILE)


def cmd_snr(config: Config) -> int:
    """Success rate against SNR to snr_curve.csv"""
    return _sweep(config, run_snr_curve, results.SNR_CURVE_FILE)


def cmd_recover(config: Config) -> int:
    image = load_input(config)
    task = image_task(config, image)
    out = _output_dir(config)
    outcome = recover_image(task, threads=config.get("run.threads"))

    image_path = image_io.write_image(out, outcome.image)
    results.write_metrics(out, outcome, config.get("run.seed"), timing=config.get("run.timing"))
    results.write_manifest(out, config)
    if outcome.exact:
        print("✅ Exact reconstruction")
    else:
        print(f"✅ PSNR {outcome.psnr_db:.3f} dB")
    print(f"   Image: {image_path}")
    print(f"   Metrics: {out / results.METRICS_FILE}")
    return EXIT_OK


def report(checks: List[CheckResult]) -> int:
    """Print each check under its group and the final tally"""
    for group, members in groupby(checks, key=lambda check: check.group):
        print(f"\nTesting {group}...")
        for check in members:
            mark = "✅" if check.passed else "❌"
            print(f"{mark} {check.name}: {check.detail}")

    passed = sum(check.passed for check in checks)
    total = len(checks)
    print("\n=== Test Results ===")
    print(f"Passed: {passed}/{total}")
    if passed == total:
        print("🎉 All checks passed!")
        return EXIT_OK
    for check in checks:
        if not check.passed:
            print(f"❌ {check.group} / {check.name}: {check.detail}")
    return EXIT_CHECK_FAILED


def cmd_selftest(config: Config) -> int:
    print("=== hpr self-test ===")
    checks = run_selftest(
        trials=config.get("selftest.trials"),
        seed=config.get("run.seed"),
        inject_sign_error=config.get("selftest.inject_sign_error"),
    )
    return report(checks)


def cmd_gradcheck(config: Config) -> int:
    print("=== hpr gradient check ===")
    return report(run_gradcheck(points=config.get("gradcheck.points"), seed=config.get("run.seed")))


COMMANDS: Dict[str, Callable[[Config], int]] = {
    "simulate": cmd_simulate,
    "snr": cmd_snr,
    "recover": cmd_recover,
    "selftest": cmd_selftest,
    "gradcheck": cmd_gradcheck,
}


def run_command(name: str, config: Config) -> int:
    """Dispatch and map errors to exit codes"""
    try:
        command = COMMANDS[name]
    except KeyError:
        print(f"❌ Unknown command: {name}")
        return EXIT_CONFIG
    try:
        return command(config)
    except HprError as e:
        # config, image and solver/model mismatches all surface here
        logger.error("%s", e)
        print(f"❌ {e}")
        return EXIT_CONFIG
