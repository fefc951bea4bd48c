"""Experiment configuration files.

Line-oriented ``key = value`` text with ``[section]`` headers (INI style, read
with :mod:`configparser`).  Lists are comma separated; matrices separate rows
with ``;``.  The README lists every key.
"""

from __future__ import annotations

import configparser
import hashlib
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

MAX_SWEEP_RUNS = 256

# section -> allowed keys
SCHEMA = {
    "experiment": {"name", "kind", "out_dir"},
    "objective": {"name", "a", "b", "q", "scale", "points"},
    "flow": {"alpha", "theta", "mode", "scheme", "t0", "dt", "t_end", "x0", "v0"},
    "sweep": {"alpha", "theta", "q", "theta_one_classical", "workers"},
    "outputs": {"fit", "window", "envelope", "ml_eta", "tail_fraction"},
    "fde": {"gamma", "theta", "v0", "t0", "dt", "t_end"},
    "picard": {"t_end", "max_iters", "tol"},
}
KINDS = ("flow", "scalar_fde", "picard")
FITS = ("power", "exponential", "best", "none")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass
class ExperimentSpec:
    name: str
    kind: str
    objective: dict
    flow: dict
    sweeps: dict
    outputs: dict
    out_dir: str
    fde: dict = field(default_factory=dict)
    picard: dict = field(default_factory=dict)
    source: Optional[str] = None
    text: str = ""

    @property
    def spec_hash(self):
        return hashlib.sha256(self.text.encode()).hexdigest()[:16]

    @property
    def has_sweep(self):
        return any(k in self.sweeps for k in ("alpha", "theta", "q"))

    def sweep_points(self):
        """Cross product of the sweep lists, in file order (q, alpha, theta)."""
        qs = self.sweeps.get("q") or [self.objective.get("q")]
        alphas = self.sweeps.get("alpha") or [self.flow["alpha"]]
        thetas = self.sweeps.get("theta") or [self.flow["theta"]]
        return [(q, a, t) for q in qs for a in alphas for t in thetas]


def _line_of(text, section, key=None):
    """1-based line number of a section header or of a key inside it."""
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section:
            k = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            if k == key:
                return i
    return None


def _floats(value):
    return [float(v) for v in value.replace(";", ",").split(",") if v.strip()]


def _vector(value):
    return np.array(_floats(value))


def _matrix(value):
    rows = [r for r in value.split(";") if r.strip()]
    return np.array([[float(v) for v in r.split(",") if v.strip()] for r in rows])


def _bool(value):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def parse_config(text: str, source: Optional[str] = None) -> ExperimentSpec:
    """Parse config text into an :class:`ExperimentSpec`.

    Raises :class:`ConfigError` naming the offending line.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.MissingSectionHeaderError as exc:  # subclass of ParsingError
        raise ConfigError("content before the first [section] header", exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line (expected 'key = value')", lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    for section in cp.sections():
        sec = section.lower()
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", _line_of(text, sec))
        for key in cp[section]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", _line_of(text, sec, key))

    def get(sec, key, conv, default=None, required=False):
        if cp.has_option(sec, key):
            raw = cp.get(sec, key)
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for {key!r} in [{sec}]: {exc}", _line_of(text, sec, key)
                ) from None
        if required:
            raise ConfigError(f"missing required key {key!r} in [{sec}]", _line_of(text, sec))
        return default

    def choice(options):
        def conv(raw):
            v = raw.strip()
            if v not in options:
                raise ValueError(f"{v!r} is not one of {options}")
            return v

        return conv

    name = get("experiment", "name", str, default=Path(source).stem if source else "experiment")
    kind = get("experiment", "kind", choice(KINDS), default="flow")
    out_dir = get("experiment", "out_dir", str, default=os.path.join("runs", name))

    objective = {}
    if cp.has_section("objective"):
        objective["name"] = get("objective", "name", str, required=True).strip()
        if cp.has_option("objective", "a"):
            objective["A"] = get("objective", "a", _matrix)
        if cp.has_option("objective", "b"):
            objective["b"] = get("objective", "b", _vector)
        if cp.has_option("objective", "q"):
            objective["q"] = get("objective", "q", float)
        if cp.has_option("objective", "scale"):
            objective["scale"] = get("objective", "scale", float)
        if cp.has_option("objective", "points"):
            objective["points"] = get("objective", "points", _matrix)
    elif kind != "scalar_fde":
        raise ConfigError("missing [objective] section")

    flow = {}
    if kind != "scalar_fde":
        if not cp.has_section("flow"):
            raise ConfigError("missing [flow] section")
        flow = {
            "alpha": get("flow", "alpha", float, required=True),
            "theta": get("flow", "theta", float, default=1.0),
            "mode": get("flow", "mode", choice(("grad_memory", "value_memory", "classical")),
                        default="grad_memory"),
            "scheme": get("flow", "scheme", choice(("l1", "gl")), default="l1"),
            "t0": get("flow", "t0", float, default=1.0),
            "dt": get("flow", "dt", float, default=1e-3),
            "t_end": get("flow", "t_end", float, default=100.0),
            "x0": get("flow", "x0", _vector, required=True),
            "v0": get("flow", "v0", _vector, default=None),
        }
        if flow["v0"] is None:
            flow["v0"] = np.zeros_like(flow["x0"])

    sweeps = {}
    for key in ("alpha", "theta", "q"):
        if cp.has_option("sweep", key):
            vals = get("sweep", key, _floats)
            if not vals:
                raise ConfigError(f"empty sweep list {key!r}", _line_of(text, "sweep", key))
            sweeps[key] = vals
    sweeps["theta_one_classical"] = get("sweep", "theta_one_classical", _bool, default=True)
    sweeps["workers"] = get("sweep", "workers", int, default=1)

    outputs = {
        "fit": get("outputs", "fit", choice(FITS), default="best"),
        "window": get("outputs", "window", _floats, default=None),
        "envelope": get("outputs", "envelope", _bool, default=True),
        "ml_eta": get("outputs", "ml_eta", float, default=None),
        "tail_fraction": get("outputs", "tail_fraction", float, default=0.2),
    }
    if outputs["window"] is not None and len(outputs["window"]) != 2:
        raise ConfigError("window needs two numbers 't_lo, t_hi'", _line_of(text, "outputs", "window"))

    fde = {}
    if kind == "scalar_fde":
        fde = {
            "gamma": get("fde", "gamma", float, required=True),
            "theta": get("fde", "theta", float, required=True),
            "v0": get("fde", "v0", float, default=1.0),
            "t0": get("fde", "t0", float, default=0.0),
            "dt": get("fde", "dt", float, default=1e-3),
            "t_end": get("fde", "t_end", float, default=5.0),
        }
    picard = {}
    if kind == "picard":
        picard = {
            "t_end": get("picard", "t_end", float, default=None),
            "max_iters": get("picard", "max_iters", int, default=200),
            "tol": get("picard", "tol", float, default=1e-10),
        }

    spec = ExperimentSpec(
        name=name, kind=kind, objective=objective, flow=flow, sweeps=sweeps,
        outputs=outputs, out_dir=out_dir, fde=fde, picard=picard, source=source, text=text,
    )
    if spec.has_sweep:
        n_runs = len(spec.sweep_points())
        if n_runs > MAX_SWEEP_RUNS:
            raise ConfigError(f"sweep has {n_runs} runs; the cap is {MAX_SWEEP_RUNS}",
                              _line_of(text, "sweep"))
    return spec


def preset_names():
    return sorted(
        p.name[:-4] for p in resources.files("fraflow.presets").iterdir() if p.name.endswith(".ini")
    )


def read_preset(name):
    return resources.files("fraflow.presets").joinpath(f"{name}.ini").read_text()


def load_config(path_or_preset: str) -> ExperimentSpec:
    """Read a config file; a bare preset name (e.g. ``ml-scalar``) also works."""
    path = Path(path_or_preset)
    if path.is_file():
        return parse_config(path.read_text(), source=str(path))
    if path_or_preset in preset_names():
        return parse_config(read_preset(path_or_preset), source=f"{path_or_preset}.ini")
    raise FileNotFoundError(f"no config file or preset named {path_or_preset!r}")
