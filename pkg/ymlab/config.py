# ymlab/config.py
"""Run configuration: flat `section.key = value` files plus `--set` overrides."""
from __future__ import annotations
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from .errors import ConfigError

Parser = Callable[[str], Any]
Check = Callable[[Any], Optional[str]]


def _int_list(text: str) -> List[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _float_list(text: str) -> List[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _positive(v):
    return None if v > 0 else "must be positive"


def _nonnegative(v):
    return None if v >= 0 else "must be nonnegative"


def _at_least(k):
    return lambda v: None if v >= k else f"must be at least {k}"


def _one_of(*choices):
    return lambda v: None if v in choices else f"must be one of {', '.join(map(str, choices))}"


def _nonempty(vs):
    return None if vs else "must not be empty"


def _all(check):
    def run(vs):
        if not vs:
            return "must not be empty"
        bad = [check(v) for v in vs if check(v)]
        return bad[0] if bad else None
    return run


@dataclass(frozen=True)
class Key:
    parse: Parser
    default: Any
    check: Optional[Check] = None


FIELDS = ("flat", "abelian_cone", "maxwell", "yang_monopole", "instanton_cylinder")

SCHEMA: Dict[str, Key] = {
    "lattice.dim": Key(int, 4, _one_of(2, 3, 4)),
    "lattice.extent": Key(_int_list, [4], _all(_at_least(2))),
    "lattice.spacing": Key(float, 1.0, _positive),
    "group": Key(str.lower, "su2", _one_of("u1", "su2")),
    "seed": Key(int, 0, _nonnegative),
    "flow.dt": Key(float, 0.05, _positive),
    "flow.t_max": Key(float, 50.0, _positive),
    "flow.grad_tol": Key(float, 1e-6, _positive),
    "flow.energy_drop_eps": Key(float, 0.1, _positive),
    "flow.scheme": Key(str.lower, "explicit_euler", _one_of("explicit_euler", "rk4")),
    "flow.start": Key(str.lower, "random", _one_of("flat", "random", "unstable")),
    "flow.amplitude": Key(float, 0.05, _nonnegative),
    "flow.checkpoint_every": Key(int, 0, _nonnegative),
    "flow.max_steps": Key(int, 100_000, _at_least(1)),
    "gauge.newton_tol": Key(float, 1e-10, _positive),
    "gauge.input": Key(str, ""),
    "gauge.steps": Key(int, 20, _at_least(2)),
    "gauge.reference": Key(str.lower, "flat", _one_of("flat", "final")),
    "spectrum.count": Key(int, 8, _at_least(1)),
    "spectrum.reference": Key(str.lower, "flat", _one_of("flat", "flux")),
    "asymptotics.input": Key(str, ""),
    "asymptotics.window_L": Key(float, 1.0, _positive),
    "asymptotics.delta": Key(float, 0.05, _nonnegative),
    "asymptotics.gamma": Key(float, 1.0, _positive),
    "asymptotics.epsilon": Key(float, 0.0, _nonnegative),
    "asymptotics.observable": Key(str.lower, "tail_length", _one_of("tail_length", "dist_ref")),
    "asymptotics.mu": Key(_float_list, [-2.0], _nonempty),
    "asymptotics.energy_ref": Key(float, 0.0),
    "cone.n": Key(int, 5, _at_least(5)),
    "cone.field": Key(str.lower, "abelian_cone", _one_of(*FIELDS)),
    "cone.radii": Key(_float_list, [0.25, 0.5, 1.0], _all(_positive)),
    "output.dir": Key(str, ""),
}


def _default_output_dir() -> str:
    return os.environ.get("YMLAB_OUTPUT_DIR") or "ymlab-out"


@dataclass
class RunConfig:
    values: Dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        return self.values.get(key, SCHEMA[key].default)

    def set(self, key: str, text: str):
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        spec = SCHEMA[key]
        try:
            value = spec.parse(text.strip())
        except ValueError as e:
            raise ConfigError(key, f"cannot parse {text.strip()!r} ({e})") from e
        if spec.check is not None:
            problem = spec.check(value)
            if problem:
                raise ConfigError(key, f"{problem} (got {text.strip()!r})")
        self.values[key] = value

    @property
    def extent(self) -> Tuple[int, ...]:
        ext = self["lattice.extent"]
        return tuple(ext) * self["lattice.dim"] if len(ext) == 1 else tuple(ext)

    @property
    def output_dir(self) -> Path:
        return Path(self["output.dir"] or _default_output_dir())

    def validate(self):
        """Cross-key checks; run before any computation."""
        ext = self["lattice.extent"]
        if len(ext) not in (1, self["lattice.dim"]):
            raise ConfigError("lattice.extent", f"has {len(ext)} entries for dimension {self['lattice.dim']}")
        bound = 0.1 * self["lattice.spacing"] ** 2
        if self["flow.dt"] > bound * (1 + 1e-12):
            raise ConfigError("flow.dt", f"{self['flow.dt']} exceeds the stability bound 0.1 a^2 = {bound:g}")
        return self

    def to_text(self) -> str:
        lines = []
        for key in SCHEMA:
            v = self[key]
            lines.append(f"{key} = {','.join(map(str, v)) if isinstance(v, list) else v}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, **values) -> "RunConfig":
        out = RunConfig(dict(self.values))
        out.values.update(values)
        return out


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'section.key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        cfg.set(key, value)
    return cfg


def load_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> RunConfig:
    """File values first, then each `key=value` override in order; validated on return."""
    cfg = RunConfig()
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError("--config", f"cannot read {path}: {e.strerror}") from e
        cfg = parse_config_text(text, source=str(path))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like section.key=value")
        key, value = item.split("=", 1)
        cfg.set(key, value)
    return cfg.validate()
