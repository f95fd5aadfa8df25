"""Plain-text ``key=value`` scenario configuration."""
from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError

__all__ = ["ScenarioConfig", "parse_config", "REQUIRED_KEYS", "load_config"]

SCENARIOS = ("shock_tube", "homogeneous", "free_transport")
SCHEMES = ("euler_frame", "rk4")
COLLISIONS = ("boltzmann", "bgk", "off")
WALLS = ("specular", "diffuse", "periodic", "outflow")

REQUIRED_KEYS = ("scenario", "kn", "order_x", "order_v", "elements", "tau")


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _times(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        out.append("dt" if part == "dt" else float(part))
    return tuple(out)


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return parse


# key: (parser, default, range check, range description)
_FIELDS = {
    "scenario": (_choice(SCENARIOS), None, None, ""),
    "kn": (float, None, _positive, "> 0"),
    "order_x": (int, None, _nonneg, ">= 0"),
    "order_v": (int, None, _nonneg, ">= 0"),
    "elements": (int, None, _positive, ">= 1"),
    "tau": (float, None, _positive, "> 0"),
    "t_end": (float, 0.14, _nonneg, ">= 0"),
    "x_left": (float, -1.0, None, ""),
    "x_right": (float, 1.0, None, ""),
    "diaphragm": (float, 0.0, None, ""),
    "rho_left": (float, 8.0, _positive, "> 0"),
    "rho_right": (float, 1.0, _positive, "> 0"),
    "T_left": (float, 1.0, _positive, "> 0"),
    "T_right": (float, 1.0, _positive, "> 0"),
    "V_left": (float, 0.0, None, ""),
    "V_right": (float, 0.0, None, ""),
    "bimodal_shift": (float, 0.6, _nonneg, ">= 0"),
    "perturbation": (float, 0.2, lambda x: 0 <= x < 1, "in [0, 1)"),
    "boundary": (_choice(WALLS), "specular", None, ""),
    "wall_T": (float, 1.0, _positive, "> 0"),
    "collision": (_choice(COLLISIONS), "bgk", None, ""),
    "beta": (float, 0.0, lambda x: 0 <= x <= 1, "in [0, 1]"),
    "b_theta": (float, 0.07957747154594767, _positive, "> 0"),
    "conservation_fix": (_bool, True, None, ""),
    "scheme": (_choice(SCHEMES), "rk4", None, ""),
    "smoothing_c": (float, 1.0, _nonneg, ">= 0"),
    "frame_interval": (int, 1, _nonneg, ">= 0"),
    "wall_penalty": (float, 1e8, _positive, "> 0"),
    "t_min": (float, 1e-6, _positive, "> 0"),
    "snapshot_times": (_times, ("dt", 0.014, 0.056, 0.098, 0.14), None, ""),
    "plot_points": (int, 0, _nonneg, ">= 0 (0 means 5 per element)"),
    "output_dir": (str, "output", None, ""),
}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    kn: float
    order_x: int
    order_v: int
    elements: int
    tau: float
    t_end: float = 0.14
    x_left: float = -1.0
    x_right: float = 1.0
    diaphragm: float = 0.0
    rho_left: float = 8.0
    rho_right: float = 1.0
    T_left: float = 1.0
    T_right: float = 1.0
    V_left: float = 0.0
    V_right: float = 0.0
    bimodal_shift: float = 0.6
    perturbation: float = 0.2
    boundary: str = "specular"
    wall_T: float = 1.0
    collision: str = "bgk"
    beta: float = 0.0
    b_theta: float = 0.07957747154594767
    conservation_fix: bool = True
    scheme: str = "rk4"
    smoothing_c: float = 1.0
    frame_interval: int = 1
    wall_penalty: float = 1e8
    t_min: float = 1e-6
    snapshot_times: tuple = ("dt", 0.014, 0.056, 0.098, 0.14)
    plot_points: int = 0
    output_dir: str = "output"

    def __post_init__(self):
        if not self.x_left < self.x_right:
            raise ConfigError("x_left must be smaller than x_right")

    def replace(self, **changes) -> "ScenarioConfig":
        """Copy with overrides, each validated like a parsed value."""
        values = self.as_dict()
        for key, value in changes.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown key {key!r}")
            values[key] = _validate(key, value if not isinstance(value, str) else _FIELDS[key][0](value))
        return ScenarioConfig(**values)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def manifest_lines(self):
        out = []
        for key, value in self.as_dict().items():
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            out.append(f"{key}={value}")
        return out


def _validate(key, value, line=None):
    _, _, check, desc = _FIELDS[key]
    if check is not None and not check(value):
        raise ConfigError(f"{key}={value} is out of range (must be {desc})", line)
    return value


def parse_config(text: str) -> ScenarioConfig:
    """Parse ``key=value`` lines; ``#`` starts a comment. Errors name the line."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            parsed = _FIELDS[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
        values[key] = _validate(key, parsed, lineno)
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    return ScenarioConfig(**values)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config(text)
