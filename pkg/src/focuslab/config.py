"""Scenario configuration: sectioned ``key = value`` files plus CLI overrides.

Example file::

    [scenario]
    model = tightbinding
    N = 1..10
    lambda = 1.0
    n0 = 1

    [time]
    samples = 400

    [output]
    dir = out
    format = csv

Values are applied with precedence CLI > file > defaults.  Unknown sections
or keys are rejected with the offending line number.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, fields, replace

from focuslab.errors import ConfigError

MODELS = ("automaton", "tightbinding", "continuum")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class ScenarioConfig:
    model: str = "tightbinding"
    n: int = 7
    n_range: tuple[int, int] | None = None
    delta: tuple[float, ...] = (0.05,)
    lam: float = 1.0
    n0: int = 1
    length: float = 1.0
    t_max: float | None = None
    samples: int | None = None
    packets: int = 1
    spacing: int | None = None
    k_nodes: int = 201
    times: tuple[str, ...] = ("0.0", "focus")
    shear: bool = True
    out: str = "focuslab-out"
    format: str = "csv"
    threads: int | None = None

    def sizes(self) -> list[int]:
        if self.n_range is None:
            return [self.n]
        return list(range(self.n_range[0], self.n_range[1] + 1))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_text(self) -> str:
        """Config file text that parses back to this configuration."""
        lines = []
        for section, keys in _SECTIONS.items():
            body = []
            for key, (attr, _, fmt) in keys.items():
                value = getattr(self, attr)
                if value is None:
                    continue
                body.append(f"{key} = {fmt(self)}")
            if body:
                lines.append(f"[{section}]")
                lines.extend(body)
                lines.append("")
        return "\n".join(lines)


def _int(text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _float(text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {text!r}")
    return value


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _sizes(text):
    """``"7"`` or ``"1..10"`` into ``{"n": ..., "n_range": ...}``."""
    m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        return {"n": lo, "n_range": (lo, hi)}
    return {"n": _int(text), "n_range": None}


def _list(text, item):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError("expected a non-empty comma-separated list")
    return tuple(item(p) for p in parts)


def _time_item(text):
    if text == "focus":
        return text
    value = _float(text)
    if value < 0:
        raise ConfigError(f"times must be non-negative, got {text!r}")
    return repr(value)


def _sizes_text(cfg):
    if cfg.n_range is not None:
        return f"{cfg.n_range[0]}..{cfg.n_range[1]}"
    return str(cfg.n)


# section -> key -> (attribute, parser returning {attr: value} or a value, formatter)
_SECTIONS = {
    "scenario": {
        "model": ("model", str.strip, lambda c: c.model),
        "N": ("n", _sizes, _sizes_text),
        "delta": ("delta", lambda s: _list(s, _float), lambda c: ", ".join(repr(d) for d in c.delta)),
        "lambda": ("lam", _float, lambda c: repr(c.lam)),
        "n0": ("n0", _int, lambda c: str(c.n0)),
        "L": ("length", _float, lambda c: repr(c.length)),
    },
    "time": {
        "tmax": ("t_max", _float, lambda c: repr(c.t_max)),
        "samples": ("samples", _int, lambda c: str(c.samples)),
    },
    "packets": {
        "count": ("packets", _int, lambda c: str(c.packets)),
        "spacing": ("spacing", _int, lambda c: str(c.spacing)),
    },
    "wigner": {
        "k_nodes": ("k_nodes", _int, lambda c: str(c.k_nodes)),
        "times": ("times", lambda s: _list(s, _time_item), lambda c: ", ".join(c.times)),
        "shear": ("shear", _bool, lambda c: str(c.shear).lower()),
    },
    "output": {
        "dir": ("out", str.strip, lambda c: c.out),
        "format": ("format", lambda s: s.strip().lower(), lambda c: c.format),
        "threads": ("threads", _int, lambda c: str(c.threads)),
    },
}

# flat names accepted on the command line, mapped to their (section, key)
CLI_KEYS = {key.lower() if key not in ("N", "L") else key: (section, key)
            for section, keys in _SECTIONS.items() for key in keys}


def _apply(updates: dict, section: str, key: str, text: str):
    attr, parse, _ = _SECTIONS[section][key]
    value = parse(text)
    if isinstance(value, dict):
        updates.update(value)
    else:
        updates[attr] = value


def _line_index(text: str) -> dict:
    index = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        head = re.match(r"\s*\[([^\]]+)\]", line)
        if head:
            section = head.group(1).strip()
            index.setdefault((section, None), lineno)
            continue
        item = re.match(r"\s*([^=#;\s][^=]*?)\s*=", line)
        if item:
            index[(section, item.group(1))] = lineno
    return index


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse file text into attribute updates; errors carry ``source:line``."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = _line_index(text)
    updates = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            where = lines.get((section, None), "?")
            raise ConfigError(f"{source}:{where}: unknown section [{section}]")
        for key, value in parser.items(section):
            where = lines.get((section, key), "?")
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{source}:{where}: unknown key {key!r} in [{section}]")
            try:
                _apply(updates, section, key, value)
            except ConfigError as exc:
                raise ConfigError(f"{source}:{where}: {key}: {exc}") from None
    return updates


def parse_overrides(values: dict) -> dict:
    """CLI flag strings (``None`` means absent) into attribute updates."""
    updates = {}
    for name, text in values.items():
        if text is None:
            continue
        section, key = CLI_KEYS[name]
        try:
            _apply(updates, section, key, str(text))
        except ConfigError as exc:
            raise ConfigError(f"--{name}: {exc}") from None
    return updates


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    if cfg.model not in MODELS:
        raise ConfigError(f"model must be one of {', '.join(MODELS)}, got {cfg.model!r}")
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    if cfg.n < 1:
        raise ConfigError("N must be at least 1")
    if cfg.n_range is not None and cfg.n_range[1] < cfg.n_range[0]:
        raise ConfigError("N range must be ascending")
    if cfg.lam == 0:
        raise ConfigError("lambda must be non-zero")
    if cfg.n0 < 0:
        raise ConfigError("n0 must be non-negative")
    if cfg.length <= 0:
        raise ConfigError("L must be positive")
    if cfg.t_max is not None and (cfg.t_max < 0 or (cfg.t_max == 0 and cfg.model != "automaton")):
        raise ConfigError("tmax must be positive (automaton: a non-negative step count)")
    if cfg.samples is not None and cfg.samples < 3:
        raise ConfigError("samples must be at least 3")
    if cfg.packets < 1:
        raise ConfigError("packet count must be positive")
    if cfg.spacing is not None and cfg.spacing <= 2 * max(cfg.sizes()):
        raise ConfigError(f"spacing {cfg.spacing} makes packets overlap")
    if cfg.k_nodes < 3:
        raise ConfigError("k_nodes must be at least 3")
    if cfg.threads is not None and cfg.threads < 1:
        raise ConfigError("threads must be positive")
    if cfg.model == "automaton" and cfg.t_max is not None and cfg.t_max != int(cfg.t_max):
        raise ConfigError("automaton tmax counts steps and must be an integer")
    return cfg


def build_config(text: str | None = None, source: str = "<config>",
                 overrides: dict | None = None) -> ScenarioConfig:
    """Defaults, then file ``text``, then CLI ``overrides``; validated."""
    cfg = ScenarioConfig()
    if text is not None:
        cfg = replace(cfg, **parse_config_text(text, source))
    if overrides:
        cfg = replace(cfg, **parse_overrides(overrides))
    return validate(cfg)


def load_config(path: str, overrides: dict | None = None) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return build_config(text, path, overrides)
