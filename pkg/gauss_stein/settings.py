import functools
import logging
import os
from typing import Optional

import yaml
from pydantic import ValidationError

from .errors import InvalidArgumentError
from .models import AppSettings, NumericsSettings, OracleSettings

logger = logging.getLogger(__name__)

# --- Configuration & Globals ---
SETTINGS_USER_FILE = "settings_user.yaml"
SETTINGS_DEFAULT_FILE = "settings_default.yaml"
TOLERANCE_ENV_VAR = "GAUSS_STEIN_TOL"

_REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def get_resource_path(relative_path: str) -> str:
    return os.path.join(_REPO_ROOT, relative_path)


def _read_yaml(path: str) -> dict:
    with open(path, "r") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"{path}: expected a YAML mapping at top level")
    return data


def _merge(settings: dict, overrides: dict) -> dict:
    for k, v in overrides.items():
        if isinstance(v, dict) and k in settings and isinstance(settings[k], dict):
            settings[k].update(v)
        else:
            settings[k] = v
    return settings


def _tolerance_overrides() -> dict:
    """Reads GAUSS_STEIN_TOL: a YAML file path or an inline YAML mapping of numerics keys."""
    raw = os.environ.get(TOLERANCE_ENV_VAR, "").strip()
    if not raw:
        return {}
    try:
        if os.path.isfile(raw):
            overrides = _read_yaml(raw)
        else:
            overrides = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise InvalidArgumentError(f"{TOLERANCE_ENV_VAR}: not valid YAML ({e})")
    if not isinstance(overrides, dict):
        raise InvalidArgumentError(
            f"{TOLERANCE_ENV_VAR}: expected a mapping of tolerance names to values"
        )
    logger.debug("  -> %s overrides: %s", TOLERANCE_ENV_VAR, sorted(overrides))
    return overrides


# --- Settings ---
def load_settings(user_file: Optional[str] = None) -> dict:
    settings = {}
    default_path = get_resource_path(SETTINGS_DEFAULT_FILE)
    if os.path.exists(default_path):
        settings = _read_yaml(default_path)

    user_path = user_file or SETTINGS_USER_FILE
    if os.path.exists(user_path):
        _merge(settings, _read_yaml(user_path))

    numerics = settings.setdefault("numerics", {})
    numerics.update(_tolerance_overrides())
    return settings


def save_settings(settings: dict, user_file: Optional[str] = None):
    with open(user_file or SETTINGS_USER_FILE, "w") as f:
        yaml.dump(settings, f, default_flow_style=False)


def parse_settings(settings: dict) -> AppSettings:
    try:
        return AppSettings.model_validate(settings)
    except ValidationError as e:
        raise InvalidArgumentError(f"invalid settings: {e}") from e


@functools.lru_cache(maxsize=1)
def get_settings() -> AppSettings:
    return parse_settings(load_settings())


def reload_settings() -> AppSettings:
    get_settings.cache_clear()
    return get_settings()


def get_numerics(settings: Optional[NumericsSettings] = None) -> NumericsSettings:
    return settings if settings is not None else get_settings().numerics


def get_oracle_settings(settings: Optional[OracleSettings] = None) -> OracleSettings:
    return settings if settings is not None else get_settings().oracle


def with_overrides(numerics: NumericsSettings, **overrides) -> NumericsSettings:
    """Returns a copy of `numerics` with validated overrides (CLI --tol flags)."""
    try:
        return NumericsSettings.model_validate({**numerics.model_dump(), **overrides})
    except ValidationError as e:
        raise InvalidArgumentError(f"invalid tolerance override: {e}") from e
