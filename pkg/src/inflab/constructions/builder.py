"""Name-based access to every family, for the CLI and the experiment runner."""

from __future__ import annotations

import json
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from ..errors import UsageError
from ..graph import Graph, random_coloring
from .base import Schedule
from .basic import BasicMajority, BasicMajorityParams, BasicMinority, BasicMinorityParams
from .gadgets import EdgeGadget, EdgeGadgetParams
from .tower import ProportionalTower, ProportionalTowerParams


def erdos_renyi(n: int, mean_degree: float, seed: int) -> Graph:
    """G(n, p) with p = mean_degree / (n - 1), sampled pair by pair with numpy."""
    if n < 2:
        raise UsageError("random graphs need n >= 2")
    p = min(1.0, mean_degree / (n - 1))
    # keep the graph stream apart from the coloring stream that uses the same seed
    rng = np.random.default_rng([seed, 0x6E72])
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def tower_params(params: dict) -> ProportionalTowerParams:
    keys = {"lambda": "lam", "alpha": "alpha", "mu": "mu", "p": "p", "eps": "eps"}
    kw = {dst: Fraction(str(params[src])) for src, dst in keys.items() if params.get(src) is not None}
    if params.get("c0") is not None:
        kw["c0"] = float(params["c0"])
    if params.get("d0") is not None:
        kw["d0"] = int(params["d0"])
    kw["pad_outputs"] = bool(params.get("pad_outputs", False))
    if "lam" not in kw:
        raise UsageError("prop-tower needs --lambda")
    return ProportionalTowerParams(m=int(params["m"]), **kw)


CONSTRUCTORS: dict[str, Callable[[dict], object]] = {
    "edge-gadget": lambda p: EdgeGadget(EdgeGadgetParams(int(p["copies"]))),
    "basic-minority": lambda p: BasicMinority(BasicMinorityParams(int(p["m"]))),
    "basic-majority": lambda p: BasicMajority(BasicMajorityParams(int(p["m"]), float(p.get("c0") or 1.0))),
    "prop-tower": lambda p: ProportionalTower(tower_params(p)),
}
FAMILIES = [*CONSTRUCTORS, "random"]

# which parameter an experiment sweeps for each family
SIZE_KEY = {"edge-gadget": "copies", "basic-minority": "m", "basic-majority": "m",
            "prop-tower": "m", "random": "n"}


@lru_cache(maxsize=8)
def _cached(family: str, frozen: str):
    return CONSTRUCTORS[family](json.loads(frozen))


def construction(family: str, params: dict):
    """Build (or reuse) the construction object for ``family``."""
    if family not in CONSTRUCTORS:
        raise UsageError(f"unknown construction {family!r}; choose from {', '.join(CONSTRUCTORS)}")
    frozen = json.dumps(params, sort_keys=True, default=str)
    try:
        return _cached(family, frozen)
    except KeyError as exc:
        raise UsageError(f"family {family} needs parameter {exc.args[0]!r}") from None


def describe(con) -> dict:
    meta = dict(con.meta)
    if isinstance(con, ProportionalTower):
        audit = con.audit()
        meta["audit"] = {
            "collector_degrees_ok": audit.collector_degrees_ok,
            "regular_joins_ok": audit.regular_joins_ok,
            "control_degree_min": min(audit.control_degrees),
            "control_degree_max": max(audit.control_degrees),
            "control_degree_full": audit.control_expected,
            "degree_identity_max_slack": str(audit.degree_identity_max_slack)}
    return meta


def generate(family: str, params: dict, seed: int) -> tuple[Graph, Schedule | None, dict]:
    """Graph, schedule (None for random graphs) and metadata for one seed."""
    if family == "random":
        try:
            n = int(params["n"])
        except KeyError:
            raise UsageError("family random needs parameter 'n'") from None
        g = erdos_renyi(n, float(params.get("mean_degree") or 8), seed)
        return g, None, {"nodes": g.n, "edges": g.num_edges}
    con = construction(family, params)
    return con.graph, con.plan(random_coloring(con.graph, seed)), describe(con)
