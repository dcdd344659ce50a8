"""JSON persistence for scenarios and controller gains.

Scenario schema (all matrices are row-major nested arrays):

    {
      "agents": [{"A": .., "B": .., "E": .., "Cy": .., "Dy": .., "Hy": ..,
                  "Ce": .., "De": .., "He": ..}, ...],
      "exosystem": {"S": .., "w0": [..]},
      "graph": {"nodes": N+1, "edges": [[tail, head, weight], ...]},
      "informed": l,
      "x0": [[..], ...],
      "estimator_init": {"policy": "exact" | "relative_perturbation" | "explicit",
                         "factor": 1.01, "xi": [[..]..], "eta": [[..]..]},
      "synthesis": {"interval": [a, b], "mu0": null | float,
                    "gamma_margin": 2.0, "seed": 0, "max_candidates": 500,
                    "overshoot_flags": [[true, ..], ..]}
    }

Floats are serialized with repr precision, so a load of a save
reproduces every value bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ScenarioFormatError
from .graph import Digraph
from .model import AgentPlant, EstimatorInit, Exosystem, Scenario, SynthesisOptions
from .observer import AgentGains, ControllerGains

_AGENT_KEYS = ("A", "B", "E", "Cy", "Dy", "Hy", "Ce", "De", "He")


def _mat(x) -> list:
    return np.asarray(x, dtype=float).tolist()


def scenario_to_dict(s: Scenario) -> dict:
    est = {"policy": s.estimator_init.kind}
    if s.estimator_init.kind == "relative_perturbation":
        est["factor"] = s.estimator_init.factor
    if s.estimator_init.kind == "explicit":
        est["xi"] = [_mat(v) for v in s.estimator_init.xi]
        est["eta"] = [_mat(v) for v in s.estimator_init.eta]
    syn = {
        "interval": list(s.synthesis.interval),
        "mu0": s.synthesis.mu0,
        "gamma_margin": s.synthesis.gamma_margin,
        "seed": s.synthesis.seed,
        "max_candidates": s.synthesis.max_candidates,
    }
    if s.synthesis.overshoot_flags is not None:
        syn["overshoot_flags"] = [list(row) for row in s.synthesis.overshoot_flags]
    return {
        "agents": [
            {key: _mat(getattr(ag, key)) for key in _AGENT_KEYS} for ag in s.agents
        ],
        "exosystem": {"S": _mat(s.exosystem.S), "w0": _mat(s.exosystem.w0)},
        "graph": {
            "nodes": s.graph.node_count,
            "edges": [[t, h, w] for (t, h, w) in s.graph.edges],
        },
        "informed": s.informed_count,
        "x0": [_mat(v) for v in s.x0],
        "estimator_init": est,
        "synthesis": syn,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        agents = tuple(
            AgentPlant(**{key: np.asarray(blk[key], dtype=float) for key in _AGENT_KEYS})
            for blk in doc["agents"]
        )
        exo = Exosystem(
            S=np.asarray(doc["exosystem"]["S"], dtype=float),
            w0=np.asarray(doc["exosystem"]["w0"], dtype=float),
        )
        gdoc = doc["graph"]
        graph = Digraph(
            node_count=int(gdoc["nodes"]),
            edges=tuple((int(t), int(h), float(w)) for t, h, w in gdoc["edges"]),
        )
        est_doc = doc.get("estimator_init", {"policy": "exact"})
        est = EstimatorInit(
            kind=est_doc.get("policy", "exact"),
            factor=float(est_doc.get("factor", 1.0)),
            xi=tuple(np.asarray(v, dtype=float) for v in est_doc.get("xi", ())),
            eta=tuple(np.asarray(v, dtype=float) for v in est_doc.get("eta", ())),
        )
        syn_doc = doc.get("synthesis", {})
        flags = syn_doc.get("overshoot_flags")
        syn = SynthesisOptions(
            interval=tuple(syn_doc.get("interval", (-2.5, -0.3))),
            mu0=syn_doc.get("mu0"),
            gamma_margin=float(syn_doc.get("gamma_margin", 2.0)),
            seed=int(syn_doc.get("seed", 0)),
            max_candidates=int(syn_doc.get("max_candidates", 500)),
            overshoot_flags=None if flags is None else tuple(tuple(r) for r in flags),
        )
        return Scenario(
            agents=agents,
            exosystem=exo,
            graph=graph,
            informed_count=int(doc["informed"]),
            x0=tuple(np.asarray(v, dtype=float) for v in doc["x0"]),
            estimator_init=est,
            synthesis=syn,
        )
    except ScenarioFormatError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ScenarioFormatError(f"malformed scenario: {exc}") from exc


def save_scenario(s: Scenario, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(scenario_to_dict(s), fh, indent=2)
        fh.write("\n")


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioFormatError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(doc)


def gains_to_dict(g: ControllerGains) -> dict:
    agents = []
    for ag in g.agents:
        entry = {"F": _mat(ag.F), "G": _mat(ag.G)}
        if ag.informed:
            entry["L1"] = _mat(ag.L1)
            entry["L2"] = _mat(ag.L2)
        else:
            entry["L"] = _mat(ag.L)
        agents.append(entry)
    return {"gamma": g.gamma, "lambda0": g.lambda0, "mu0": g.mu0, "agents": agents}


def gains_from_dict(doc: dict) -> ControllerGains:
    try:
        agents = []
        for entry in doc["agents"]:
            agents.append(AgentGains(
                F=np.asarray(entry["F"], dtype=float),
                G=np.asarray(entry["G"], dtype=float),
                L1=np.asarray(entry["L1"], dtype=float) if "L1" in entry else None,
                L2=np.asarray(entry["L2"], dtype=float) if "L2" in entry else None,
                L=np.asarray(entry["L"], dtype=float) if "L" in entry else None,
            ))
        return ControllerGains(
            agents=tuple(agents),
            gamma=float(doc["gamma"]),
            lambda0=float(doc["lambda0"]),
            mu0=float(doc["mu0"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"malformed gains: {exc}") from exc


def save_gains(g: ControllerGains, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(gains_to_dict(g), fh, indent=2)
        fh.write("\n")


def load_gains(path) -> ControllerGains:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioFormatError(f"cannot read gains {path}: {exc}") from exc
    return gains_from_dict(doc)
