"""Experiment configuration.

Config files are plain text, one ``key = value`` per line, ``#`` starts a
comment. Every key is optional. ``eta`` and ``eps`` may be left unset, in
which case each experiment kind uses its reference setting (see
``_presets``).
"""

from dataclasses import dataclass, field, fields, replace
import math

from ..dynamics import DEFAULT_BURN, DEFAULT_DT, LorenzParams
from ..errors import ConfigError

KINDS = ("decay_discrete", "decay_continuous", "slope_discrete", "slope_continuous", "verify")
AVERAGING = ("time", "ensemble", "both")


def _presets(p):
    return {
        "decay_discrete": {"eta": 0.1, "eps": 1.0},
        "decay_continuous": {"eta": 2.0 / p.K, "eps": 0.01},
        "slope_discrete": {"eta": 0.1, "eps": 0.01},
        "slope_continuous": {"eta": 1.0 / (2.0 * p.K), "eps": 0.01},
        "verify": {"eta": None, "eps": None},
    }


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str = "decay_discrete"
    alpha: float = 10.0
    b: float = 8.0 / 3.0
    r: float = 28.0
    eta: float | None = None
    eps: float | None = None
    h: float = 0.01
    dt: float = DEFAULT_DT
    horizon: float = 100.0
    burn_in: float = 0.5
    eps_grid: tuple = (1e-3, 1e-2, 1e-1, 1.0)
    ensemble: int = 1000
    ensemble_horizon: float = 20.0
    averaging: str = "both"
    init_error: float = 10.0
    t_burn: float = DEFAULT_BURN
    record_every: float = 0.01
    seed: int = 0
    out: str | None = field(default=None, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "eps_grid", tuple(float(e) for e in self.eps_grid))
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.averaging not in AVERAGING:
            raise ConfigError(f"averaging must be one of {AVERAGING}, got {self.averaging!r}")
        self.params  # validates alpha, b, r
        for name in ("h", "dt", "horizon", "ensemble_horizon", "record_every"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v}")
        if self.eta is not None and not (math.isfinite(self.eta) and self.eta > 0):
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.eps is not None and not (math.isfinite(self.eps) and self.eps >= 0):
            raise ConfigError(f"eps must be >= 0, got {self.eps}")
        if not 0 <= self.burn_in < 1:
            raise ConfigError(f"burn_in must lie in [0, 1), got {self.burn_in}")
        if not self.eps_grid or any(not (math.isfinite(e) and e > 0) for e in self.eps_grid):
            raise ConfigError("eps_grid must be non-empty and strictly positive")
        if self.kind.startswith("slope") and len(set(self.eps_grid)) < 4:
            raise ConfigError(f"slope fits need at least 4 distinct eps values, got {self.eps_grid}")
        if self.ensemble < 1:
            raise ConfigError("ensemble must be >= 1")
        if self.init_error < 0 or self.t_burn < 0:
            raise ConfigError("init_error and t_burn must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    @property
    def params(self):
        return LorenzParams(self.alpha, self.b, self.r)

    @property
    def continuous(self):
        return self.kind.endswith("continuous")

    def resolved(self, name):
        """``eta`` / ``eps`` with the kind's preset filled in."""
        value = getattr(self, name)
        return _presets(self.params)[self.kind][name] if value is None else value

    def with_(self, **changes):
        return replace(self, **changes)

    def header_lines(self):
        """Config echo for output files; leaves out the output path."""
        return [ln for ln in render_config(self).splitlines() if not ln.startswith("out ")]


_INT_KEYS = {"ensemble", "seed"}
_STR_KEYS = {"kind", "averaging", "out"}
_OPTIONAL = {"eta", "eps", "out"}


def _render_value(name, value):
    if value is None:
        return "none"
    if name == "eps_grid":
        return ", ".join(repr(float(e)) for e in value)
    if name in _INT_KEYS or name in _STR_KEYS:
        return str(value)
    return repr(float(value))


def render_config(spec):
    return "".join(f"{f.name} = {_render_value(f.name, getattr(spec, f.name))}\n" for f in fields(spec))


def _parse_value(name, text):
    if name in _OPTIONAL and text.lower() in ("none", ""):
        return None
    try:
        if name in _STR_KEYS:
            return text
        if name in _INT_KEYS:
            return int(text)
        if name == "eps_grid":
            return tuple(float(x) for x in text.replace(",", " ").split())
        return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None


def parse_config(text, base=None):
    """Parse ``key = value`` text on top of ``base`` (default: all defaults)."""
    known = {f.name for f in fields(ExperimentSpec)}
    changes = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        changes[key] = _parse_value(key, value)
    return replace(base or ExperimentSpec(), **changes)


def load_config(path, base=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), base)
