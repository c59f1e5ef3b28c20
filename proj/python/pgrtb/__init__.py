"""Python access to the dual-channel ad pricing core."""

import json
import os

from . import _core

__all__ = ["optimize", "replan", "simulate", "second_price_moments", "mc_second_price"]


def _config(config):
    # A path is read here so that relative log paths resolve next to the file.
    if isinstance(config, (str, os.PathLike)):
        path = os.fspath(config)
        with open(path, encoding="utf-8") as fh:
            return fh.read(), os.path.dirname(os.path.abspath(path))
    return json.dumps(config), ""


def optimize(config, threads=0):
    text, base = _config(config)
    return json.loads(_core.optimize(text, base, threads))


def replan(config, threads=0):
    text, base = _config(config)
    result, plan = _core.replan(text, base, threads)
    out = json.loads(result)
    out["plan"] = json.loads(plan)
    return out


def simulate(config, runs=0, threads=0):
    text, base = _config(config)
    return json.loads(_core.simulate(text, base, runs, threads))


def second_price_moments(xi, bid_model):
    return _core.second_price_moments(float(xi), json.dumps(bid_model))


def mc_second_price(xi, bid_model, trials=100000, seed=1):
    return _core.mc_second_price(float(xi), json.dumps(bid_model), int(trials), int(seed))
