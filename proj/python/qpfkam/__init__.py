"""Python access to the qpfkam experiment runner."""

import json
import os

from ._core import QpfkamError, run_names
from ._core import convergents as _convergents
from ._core import run as _run

__all__ = ["QpfkamError", "convergents", "run", "run_file", "run_names"]


def run(config, base_dir="."):
    """Run an experiment given as a dict. Returns (status, result, tables).

    tables maps a CSV file name to (header, rows).
    """
    status, result, tables = _run(json.dumps(config), base_dir)
    return status, json.loads(result), tables


def run_file(path, **overrides):
    with open(path) as fh:
        config = json.load(fh)
    config.update(overrides)
    return run(config, os.path.dirname(os.path.abspath(path)))


def convergents(frequency="golden", depth=40):
    """Continued fraction data with p_n, q_n as Python ints."""
    out = json.loads(_convergents(json.dumps(frequency), depth))
    for key in ("partial_quotients", "p", "q"):
        out[key] = [int(x) for x in out[key]]
    return out
