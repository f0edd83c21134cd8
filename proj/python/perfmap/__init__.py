"""Performance maps of learner hyper-parameter spaces.

Thin Python layer over the C++ core: run a learning context from a JSON
configuration, then analyse the resulting map with HP(k) and dominance.
"""

import json

from . import _core
from ._core import (
    ConfigError,
    DatasetError,
    HpUndefinedError,
    ParamSpaceError,
    PerfMapError,
    TIMEOUT_SENTINEL,
)

DEFAULT_KS = (0.05, 0.10, 0.20)

__all__ = [
    "ConfigError",
    "DatasetError",
    "HpUndefinedError",
    "ParamSpaceError",
    "PerfMapError",
    "TIMEOUT_SENTINEL",
    "DEFAULT_KS",
    "run",
    "load_map",
    "best",
    "hp",
    "hp_profile",
    "compare",
    "render_svg",
    "to_csv",
    "builtin_space",
    "cli",
]


def run(config, jobs=1, seed=None, timeout=None, subsample=None):
    """Meta-optimize the context in a run configuration file and return its map as a dict."""
    return json.loads(_core.run_config(str(config), jobs, seed, timeout, subsample))


def load_map(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def best(pmap):
    """Entry with the highest mean; the earliest wins ties."""
    return max(pmap["entries"], key=lambda e: e["mean"], default=None)


def hp(values, k):
    """HP(k) of a map dict or of a plain sequence of means."""
    means = [e["mean"] for e in values["entries"]] if isinstance(values, dict) else list(values)
    return _core.hp(means, k)


def hp_profile(pmap, ks=DEFAULT_KS):
    return _core.hp_profile(json.dumps(pmap), list(ks))


def compare(map_a, map_b, ks=DEFAULT_KS):
    """One of "A dominates B", "B dominates A", "equivalent", "incomparable"."""
    return _core.compare(list(ks), hp_profile(map_a, ks), hp_profile(map_b, ks))


def render_svg(pmap, x=(), y=""):
    return _core.render_svg(json.dumps(pmap), list(x), y)


def to_csv(pmap):
    return _core.map_to_csv(json.dumps(pmap))


def builtin_space(learner):
    return json.loads(_core.builtin_space(learner))


def cli(*args):
    """Run the command-line interface in-process; returns (exit_code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])
