"""
Configuration manager for hpr
Flat dotted keys (solver.step_size = 0.1) with typed defaults, read from
a plain key = value file and overridden from the command line
"""

import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from errors import ConfigError

CONFIG_SUFFIX = ".cfg"

# Keys whose default is None accept "none" or a value of the given type
NULLABLE = {"solver.init_truncation": float, "solver.step_growth": float, "solver.restarts": int}

TRUE_WORDS = {"true", "yes", "on", "1"}
FALSE_WORDS = {"false", "no", "off", "0"}


def bundle_dir() -> Path:
    if getattr(sys, "frozen", False):
        # PyInstaller bundle
        return Path(sys._MEIPASS)
    return Path(__file__).parent.parent


def config_search_dirs() -> list:
    """User configs first, then the ones shipped with the repository"""
    return [
        Path.home() / ".local" / "share" / "hpr" / "configs",
        bundle_dir() / "experiments" / "configs",
    ]


def resolve_config_path(name: str) -> Path:
    """A path if it exists, otherwise a named config such as ``qwf_gaussian``"""
    path = Path(name)
    if path.is_file():
        return path
    stem = path.name[:-len(CONFIG_SUFFIX)] if path.name.endswith(CONFIG_SUFFIX) else path.name
    for directory in config_search_dirs():
        candidate = directory / f"{stem}{CONFIG_SUFFIX}"
        if candidate.is_file():
            return candidate
    raise ConfigError(f"Config not found: {name}")


def _coerce(key: str, raw: Any, default: Any) -> Any:
    """Convert ``raw`` to the type of ``default``"""
    if key in NULLABLE:
        if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none", "null")):
            return None
        return _coerce("", raw, NULLABLE[key]())
    if not isinstance(raw, str):
        if isinstance(default, tuple):
            values = raw if isinstance(raw, (list, tuple)) else [raw]
            return tuple(float(v) for v in values)
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            raise ValueError(f"expected a boolean, got {raw!r}")
        if isinstance(default, int) and isinstance(raw, float) and not raw.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return type(default)(raw)

    text = raw.strip()
    if isinstance(default, bool):
        word = text.lower()
        if word in TRUE_WORDS:
            return True
        if word in FALSE_WORDS:
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(float(part) for part in text.split(",") if part.strip())
    return text


def parse_config_text(text: str) -> Dict[str, str]:
    """``key = value`` lines, ``#`` comments and blank lines ignored"""
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"Line {number}: expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"Line {number}: missing key")
        values[key] = value
    return values


class Config:
    def __init__(self, path: Optional[str] = None):
        # Default configuration
        self.default_config: Dict[str, Any] = {
            # run
            "run.seed": 0,
            "run.out": "results",
            "run.threads": 0,             # 0 = one worker per core
            "run.verbosity": "info",      # debug, info, warning, error
            "run.timing": False,          # wall-clock columns make output non-reproducible
            # model
            "model.kind": "gaussian-q",
            "model.n": 16,
            "model.alphabet": 4,
            "model.window": 8,
            # solver
            "solver.name": "qwf",
            "solver.step_size": 0.1,
            "solver.max_iters": 2000,
            "solver.stop_tol": 1e-12,
            "solver.power_iters": 100,
            "solver.power_tol": 1e-10,
            "solver.init_scale": "mean",  # mean or printed
            "solver.init_truncation": None,
            "solver.truncation_lower": 0.1,
            "solver.truncation_upper": 5.0,
            "solver.truncation_residual": math.inf,  # inf = magnitude bands only
            "solver.log_floor": 1e-12,
            "solver.backtracking": True,
            "solver.max_backoffs": 20,
            "solver.step_growth": None,   # none = solver default
            "solver.restarts": None,      # owf only, none = solver default
            "solver.pure_quaternion": False,
            # sweep
            "sweep.m_over_n": (10.0,),
            "sweep.snr_db": (math.inf,),
            "sweep.trials": 100,
            "sweep.success_threshold": 1e-5,
            "sweep.outliers": 0,
            "sweep.outlier_factor": 100.0,
            # recover
            "recover.input": "",
            "recover.synthetic": "rgb",   # rgb or msi, used when no input is given
            "recover.size": 64,
            "recover.patch": 32,
            "recover.m_over_n": 15.0,
            "recover.model": "",          # empty = coded-fourier for RGB, gaussian-o for MSI
            "recover.alphabet": 8,
            "recover.oracle": False,
            "recover.peak": 1.0,
            # selftest / gradcheck
            "selftest.trials": 1000,
            "selftest.inject_sign_error": False,
            "gradcheck.points": 20,
        }

        self.config_file = resolve_config_path(path) if path else None
        self.file_keys = set()
        self.config = self.load_config()

    def load_config(self) -> Dict[str, Any]:
        """Load configuration from file"""
        config = self.default_config.copy()
        if self.config_file is None:
            return config
        try:
            text = self.config_file.read_text()
        except OSError as e:
            raise ConfigError(f"Failed to load config {self.config_file}: {e}") from e
        values = self._typed(parse_config_text(text), str(self.config_file))
        self.file_keys = set(values)
        # Merge file values over the defaults
        return {**config, **values}

    def _typed(self, values: Dict[str, Any], origin: str) -> Dict[str, Any]:
        typed = {}
        for key, raw in values.items():
            if key not in self.default_config:
                raise ConfigError(f"Unknown config key {key!r} in {origin}")
            try:
                typed[key] = _coerce(key, raw, self.default_config[key])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"Invalid value for {key} in {origin}: {e}") from e
        return typed

    def save_config(self, path):
        """Save the resolved configuration as JSON"""
        try:
            with open(path, "w") as f:
                json.dump(self.to_dict(), f, indent=2)
        except OSError as e:
            raise ConfigError(f"Failed to save config {path}: {e}") from e

    def get(self, key: str, default=None):
        """Get configuration value"""
        return self.config.get(key, default)

    def set(self, key: str, value: Any):
        """Set configuration value"""
        self.config.update(self._typed({key: value}, "override"))

    def apply_overrides(self, assignments: Iterable[str]):
        """``key=value`` strings from the command line"""
        for assignment in assignments:
            if "=" not in assignment:
                raise ConfigError(f"Expected key=value, got {assignment!r}")
            key, value = assignment.split("=", 1)
            self.set(key.strip(), value)

    def section(self, prefix: str) -> Dict[str, Any]:
        """Keys under ``prefix.`` with the prefix stripped"""
        head = prefix + "."
        return {key[len(head):]: value for key, value in self.config.items() if key.startswith(head)}

    def to_dict(self) -> Dict[str, Any]:
        """JSON-safe copy: tuples become lists, infinities become strings"""
        def clean(value):
            if isinstance(value, tuple):
                return [clean(v) for v in value]
            if isinstance(value, float) and not math.isfinite(value):
                return str(value)
            return value

        return {key: clean(value) for key, value in sorted(self.config.items())}
