"""Plain-text key=value run configuration with flag overrides.

Recognized keys (flags win over file values):

  scale.p scale.gamma.kind scale.gamma.value scale.s0 scale.constructor
  scale.j_max run.kind run.j run.nu run.reps run.seed run.alpha run.dim
  run.slack run.delta run.out run.format

Unknown keys are rejected with the offending name.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError
from .scaling import CONSTRUCTORS, GAMMA_KINDS, GammaSpec, ScaleParams

_SCALE_KEYS = (
    "scale.p",
    "scale.gamma.kind",
    "scale.gamma.value",
    "scale.s0",
    "scale.constructor",
    "scale.j_max",
)
_RUN_KEYS = (
    "run.kind",
    "run.j",
    "run.nu",
    "run.reps",
    "run.seed",
    "run.alpha",
    "run.dim",
    "run.slack",
    "run.delta",
    "run.out",
    "run.format",
)
KNOWN_KEYS = _SCALE_KEYS + _RUN_KEYS

FORMATS = ("json", "csv", "both")


def parse_config_file(path) -> dict[str, str]:
    """key=value lines; blank lines and '#' comments allowed."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in KNOWN_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _get_float(cfg: dict, key: str, default=None) -> float | None:
    if key not in cfg:
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {cfg[key]!r}") from None


def _get_int(cfg: dict, key: str, default=None) -> int | None:
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {cfg[key]!r}") from None


def _get_list(cfg: dict, key: str, cast, default=None):
    if key not in cfg:
        return default
    raw = cfg[key]
    items = [v for v in str(raw).split(",") if v.strip()]
    try:
        return [cast(v) for v in items]
    except ValueError:
        raise ConfigError(f"{key} must be a comma-separated list, got {raw!r}") from None


def make_scale_params(cfg: dict[str, str]) -> ScaleParams:
    """Validate and build ScaleParams, naming offending config keys."""
    p = _get_float(cfg, "scale.p", 1.0)
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"scale.p must be in (0, 1], got {p}")
    kind = cfg.get("scale.gamma.kind", "constant")
    if kind not in GAMMA_KINDS:
        raise ConfigError(f"scale.gamma.kind must be one of {GAMMA_KINDS}, got {kind!r}")
    if kind == "tabulated":
        table = _get_list(cfg, "scale.gamma.value", float)
        if not table:
            raise ConfigError("scale.gamma.value must list the tabulated gamma values")
        gamma = GammaSpec.tabulated(table)
    else:
        gamma = GammaSpec(kind, value=_get_float(cfg, "scale.gamma.value", 2.0))
    s0 = _get_float(cfg, "scale.s0", 1.0)
    if not s0 >= 1.0:
        raise ConfigError(f"scale.s0 must be >= 1, got {s0}")
    constructor = cfg.get("scale.constructor", "recursive")
    if constructor not in CONSTRUCTORS:
        raise ConfigError(
            f"scale.constructor must be one of {CONSTRUCTORS}, got {constructor!r}"
        )
    j_max = _get_int(cfg, "scale.j_max", 8)
    if j_max < 2:
        raise ConfigError(f"scale.j_max must be >= 2, got {j_max}")
    return ScaleParams(p=p, gamma=gamma, s0=s0, constructor=constructor, j_max=j_max)


@dataclass
class RunConfig:
    """Resolved CLI configuration for one invocation."""

    scale: ScaleParams
    kind: str | None = None
    j_list: list[int] = field(default_factory=list)
    nu_list: list[float] = field(default_factory=list)
    reps: int = 1000
    seed: int = 0
    alpha: float = 1.0
    dim: int = 5
    slack: float = 1.0
    delta: float | None = None
    out: str = "."
    fmt: str = "both"


def make_run_config(cfg: dict[str, str], overrides: dict) -> RunConfig:
    """Merge file values and CLI flag overrides (flags win)."""
    merged = dict(cfg)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    fmt = str(merged.get("run.format", "both"))
    if fmt not in FORMATS:
        raise ConfigError(f"run.format must be one of {FORMATS}, got {fmt!r}")
    rc = RunConfig(
        scale=make_scale_params(merged),
        kind=merged.get("run.kind"),
        j_list=_get_list(merged, "run.j", int, default=[]),
        nu_list=_get_list(merged, "run.nu", float, default=[]),
        reps=_get_int(merged, "run.reps", 1000),
        seed=_get_int(merged, "run.seed", 0),
        alpha=_get_float(merged, "run.alpha", 1.0),
        dim=_get_int(merged, "run.dim", 5),
        slack=_get_float(merged, "run.slack", 1.0),
        delta=_get_float(merged, "run.delta", None),
        out=str(merged.get("run.out", ".")),
        fmt=fmt,
    )
    if rc.reps < 8:
        raise ConfigError(f"run.reps must be >= 8, got {rc.reps}")
    if not 0.0 < rc.slack <= 1.0:
        raise ConfigError(f"run.slack must be in (0, 1], got {rc.slack}")
    if rc.seed < 0 or rc.seed >= 2**64:
        raise ConfigError(f"run.seed must be an unsigned 64-bit integer, got {rc.seed}")
    return rc
