"""Plain-text experiment configuration.

Grammar, one statement per line::

    # comment (also allowed after a value)
    key = value
    key = value1, value2, ...

Blank lines are ignored. Keys are case-sensitive and may appear once.
Unknown keys are errors. Every key is optional; an empty file yields the
full default grid (K=30, C=31, M in {2000, 5000, 10000}, SNR in
{-10, -5, 0} dB, AWGN and pink noise, all three algorithms and all three
detectors, 100 runs per point).
"""

from dataclasses import dataclass

from .detectors import PILOT_LENGTH
from .harness import DETECTORS, ExperimentPlan, paper_grid
from .ica import ALGORITHMS, CONTRASTS
from .channel import NOISE_KINDS


class ConfigError(ValueError):
    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = f"line {line}: " if line is not None else ""
        what = f"{key}: " if key is not None and line is None else ""
        super().__init__(f"{where}{what}{message}")


def _ints(v):
    return tuple(int(x) for x in v)


def _floats(v):
    return tuple(float(x) for x in v)


def _one(conv):
    def parse(v):
        if len(v) != 1:
            raise ValueError("expected a single value")
        return conv(v[0])
    return parse


def _choices(allowed):
    def parse(v):
        bad = [x for x in v if x not in allowed]
        if bad:
            raise ValueError(f"unknown value(s) {bad}; allowed: {', '.join(allowed)}")
        if len(set(v)) != len(v):
            raise ValueError("duplicate values")
        return tuple(v)
    return parse


DEFAULTS = {
    "users": 30,
    "chips": 31,
    "symbols": (2000, 5000, 10000),
    "snr_db": (-10.0, -5.0, 0.0),
    "noise": ("awgn", "pink"),
    "algorithms": ("comon", "jade", "fastica"),
    "detectors": DETECTORS,
    "runs_per_point": 100,
    "base_seed": 0,
    "pilot_length": PILOT_LENGTH,
    "contrast": "kurtosis",
    "max_iterations": 100,
    "tolerance": 1e-4,
    "first_code": 0,
}

PARSERS = {
    "users": _one(int),
    "chips": _one(int),
    "symbols": _ints,
    "snr_db": _floats,
    "noise": _choices(NOISE_KINDS),
    "algorithms": _choices(ALGORITHMS),
    "detectors": _choices(DETECTORS),
    "runs_per_point": _one(int),
    "base_seed": _one(int),
    "pilot_length": _one(int),
    "contrast": _one(str),
    "max_iterations": _one(int),
    "tolerance": _one(float),
    "first_code": _one(int),
}


@dataclass
class ParsedConfig:
    values: dict

    def plan(self):
        v = self.values
        try:
            if v["contrast"] not in CONTRASTS:
                raise ConfigError(f"unknown contrast {v['contrast']!r}", key="contrast")
            scenarios = paper_grid(
                symbols=v["symbols"], snr_db=v["snr_db"], noise=v["noise"],
                algorithms=v["algorithms"], users=v["users"], chips=v["chips"],
                ica_defaults=dict(contrast=v["contrast"], max_iterations=v["max_iterations"],
                                  tolerance=v["tolerance"]),
                first_code=v["first_code"],
            )
            return ExperimentPlan(scenarios, runs_per_point=v["runs_per_point"],
                                  detectors=v["detectors"], base_seed=v["base_seed"],
                                  pilot_length=v["pilot_length"])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _split(raw):
    return [p.strip() for p in raw.split(",")]


def _assign(values, key, raw, line=None):
    if key not in PARSERS:
        raise ConfigError(f"unknown key {key!r}", line=line, key=key)
    parts = _split(raw)
    if any(p == "" for p in parts):
        raise ConfigError(f"empty value for {key!r}", line=line, key=key)
    try:
        values[key] = PARSERS[key](parts)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}", line=line, key=key) from exc


def parse_text(text, overrides=()):
    values = dict(DEFAULTS)
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, key=key)
        seen.add(key)
        _assign(values, key, raw, lineno)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = (s.strip() for s in item.split("=", 1))
        _assign(values, key, raw)
    return ParsedConfig(values)


def parse_config(path, overrides=()):
    """Read ``path`` and return the :class:`~cdmaica.harness.ExperimentPlan` it describes."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_text(text, overrides).plan()
