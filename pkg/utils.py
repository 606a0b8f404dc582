#!/usr/bin/env python3
# utils.py – tiny helper toolkit
from __future__ import annotations
import configparser, json, logging, math, os, sys
from datetime import datetime, timezone
from pathlib import Path

THREADS_ENV = "CHAINDIAG_THREADS"

def utcnow() -> str:
    """RFC‑3339 UTC timestamp."""
    return datetime.now(timezone.utc).isoformat()

def finite_or_none(obj):
    """Recursively replace NaN / ±inf floats with None so JSON stays portable."""
    if isinstance(obj, dict):
        return {k: finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [finite_or_none(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj

def jdump(obj) -> str:
    return json.dumps(finite_or_none(obj), indent=2, sort_keys=True, allow_nan=False)

def log_init(name: str, level: str | int = "INFO", log_dir: str | Path | None = None) -> logging.Logger:
    # stdout is reserved for reports and CSV, so the console handler writes to stderr
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_dir:
        log_dir = Path(log_dir); log_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_dir / f"{name}_{datetime.now(timezone.utc):%Y%m%d}.log"))
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )
    return logging.getLogger(name)

def load_config(path: str | Path | None) -> configparser.ConfigParser:
    """Read an INI file; a missing file leaves every section on its defaults."""
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path:
        read = cfg.read(path)
        if not read:
            logging.getLogger("utils").debug(f"Config {path} not found, using defaults")
    return cfg

def getint_safe(cfg, section, key, default=0):
    """Safely get integer from config with fallback."""
    try:
        return int(cfg[section][key])
    except (KeyError, ValueError):
        return default

def getfloat_safe(cfg, section, key, default=0.0):
    try:
        return float(cfg[section][key])
    except (KeyError, ValueError):
        return default

def getbool_safe(cfg, section, key, default=False):
    try:
        return cfg[section].getboolean(key, fallback=default)
    except (KeyError, ValueError):
        return default

def getfloats_safe(cfg, section, key, default: tuple[float, ...]) -> tuple[float, ...]:
    """Comma separated floats, e.g. ``tail_quantiles = 0.05, 0.95``."""
    try:
        raw = cfg[section][key]
        return tuple(float(v) for v in raw.split(",") if v.strip())
    except (KeyError, ValueError):
        return default

def resolve_threads(requested: int | None = None) -> int:
    """Explicit request, then the environment variable, then the CPU count."""
    if requested and requested > 0:
        return requested
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            n = int(env)
            if n > 0:
                return n
        except ValueError:
            logging.getLogger("utils").warning(f"Ignoring non-integer {THREADS_ENV}={env!r}")
    return os.cpu_count() or 1
