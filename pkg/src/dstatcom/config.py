"""Scenario files: TOML with one section per part of the experiment.

See ``data/canonical.scenario`` for the full schema with comments.
"""
from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .control import ControllerGains
from .criteria import ObjectiveSpec, ObjectiveTerm
from .model import PlantParams, PlantState, phase_peak_from_line_rms
from .pso import InvalidConfig, SwarmConfig
from .simharness import GainSet, Scenario, StepSpec

__all__ = ["ConfigError", "RunSetup", "load_setup", "parse_setup", "canonical_path", "describe"]


class ConfigError(ValueError):
    pass


def canonical_path() -> Path:
    return Path(str(resources.files("dstatcom") / "data" / "canonical.scenario"))


@dataclass
class RunSetup:
    scenario: Scenario
    objective: ObjectiveSpec
    swarm: SwarmConfig
    gain_sets: list = field(default_factory=list)
    source: str = ""


def _section(doc: dict, name: str, allowed: set, required: bool = True) -> dict:
    sec = doc.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing section [{name}]")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    extra = set(sec) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    return sec


def _plant(sec: dict) -> PlantParams:
    if ("frequency" in sec) == ("omega" in sec):
        raise ConfigError("[plant] needs exactly one of frequency, omega")
    if ("line_voltage_rms" in sec) == ("vs" in sec):
        raise ConfigError("[plant] needs exactly one of line_voltage_rms, vs")
    omega = sec["omega"] if "omega" in sec else 2.0 * math.pi * sec["frequency"]
    vs = sec["vs"] if "vs" in sec else phase_peak_from_line_rms(sec["line_voltage_rms"])
    try:
        return PlantParams(rs=sec["rs"], ls=sec["ls"], c=sec["c"], omega=omega, vs=vs)
    except KeyError as exc:
        raise ConfigError(f"[plant] missing {exc.args[0]}") from None


def _step(sec: dict, where: str) -> StepSpec:
    try:
        return StepSpec(float(sec["initial"]), float(sec["final"]), float(sec.get("step_time", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"[{where}] missing {exc.args[0]}") from None


def parse_setup(doc: dict, source: str = "<string>") -> RunSetup:
    extra = set(doc) - {
        "plant", "controller", "references", "initial_state",
        "simulation", "objective", "swarm", "gain_sets",
    }
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
    try:
        plant = _plant(_section(doc, "plant", {"rs", "ls", "c", "frequency", "omega", "line_voltage_rms", "vs"}))
        ctl = _section(doc, "controller", {"lambda1", "lambda2", "kp", "ki", "id_max"})
        gains = ControllerGains(**{k: float(v) for k, v in ctl.items() if k != "id_max"})

        refs = _section(doc, "references", {"vdc", "iq", "id"})
        for key in ("vdc", "iq"):
            if key not in refs:
                raise ConfigError(f"missing [references.{key}]")
        vdc_ref = _step(refs["vdc"], "references.vdc")
        iq_ref = _step(refs["iq"], "references.iq")
        id_sec = dict(refs.get("id", {"source": "pi"}))
        source_kind = id_sec.pop("source", "pi")
        if source_kind == "pi":
            id_source: Union[str, StepSpec] = "pi"
        elif source_kind == "step":
            id_source = _step(id_sec, "references.id")
        else:
            raise ConfigError(f"[references.id] source must be 'pi' or 'step', got {source_kind!r}")

        x0 = _section(doc, "initial_state", {"id", "iq", "vdc"})
        sim = _section(doc, "simulation", {"dt", "t_end", "vdc_min_guard"})
        scenario = Scenario(
            plant=plant,
            gains=gains,
            vdc_ref=vdc_ref,
            iq_ref=iq_ref,
            id_ref_source=id_source,
            initial_state=PlantState(x0.get("id", 0.0), x0.get("iq", 0.0), x0.get("vdc", vdc_ref.initial)),
            dt=float(sim.get("dt", 2e-5)),
            t_end=float(sim.get("t_end", 0.1)),
            id_max=float(ctl.get("id_max", 50.0)),
            vdc_min_guard=float(sim.get("vdc_min_guard", 1.0)),
        )

        obj = _section(doc, "objective", {"scale", "horizon", "terms"}, required=False)
        terms = [ObjectiveTerm(**t) for t in obj.get("terms", [{}])]
        objective = ObjectiveSpec(terms, float(obj.get("scale", 1000.0)), float(obj.get("horizon", scenario.t_end)))

        sw = _section(
            doc, "swarm",
            {"n_particles", "n_iterations", "w", "c1", "c2", "vmax_fraction", "seed", "bounds", "target_fitness"},
            required=False,
        )
        swarm = SwarmConfig(**sw)
        if len(swarm.bounds) != 2:
            raise ConfigError("[swarm] bounds must give [kp] and [ki] intervals")

        gain_sets = []
        for g in doc.get("gain_sets", []):
            gain_sets.append(GainSet(str(g["name"]), float(g["kp"]), float(g["ki"])))
        check_unique(gain_sets)
    except ConfigError:
        raise
    except (InvalidConfig, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return RunSetup(scenario, objective, swarm, gain_sets, source)


def check_unique(gain_sets) -> None:
    seen = set()
    for g in gain_sets:
        if g.name in seen:
            raise ConfigError(f"duplicate gain set name {g.name!r}")
        seen.add(g.name)


def load_setup(path: Optional[Union[str, Path]] = None) -> RunSetup:
    path = canonical_path() if path is None else Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}")
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_setup(doc, str(path))


def describe(setup: RunSetup) -> dict:
    """Plain-data view of the resolved configuration."""
    sc = setup.scenario
    return {
        "source": setup.source,
        "scenario": {
            "plant": asdict(sc.plant),
            "gains": asdict(sc.gains),
            "vdc_ref": asdict(sc.vdc_ref),
            "iq_ref": asdict(sc.iq_ref),
            "id_ref_source": sc.id_ref_source if sc.uses_pi else asdict(sc.id_ref_source),
            "initial_state": sc.initial_state._asdict(),
            "dt": sc.dt,
            "t_end": sc.t_end,
            "id_max": sc.id_max,
            "vdc_min_guard": sc.vdc_min_guard,
        },
        "objective": {
            "scale": setup.objective.scale,
            "horizon": setup.objective.horizon,
            "terms": [
                {"signal": t.signal, "criterion": t.criterion.value, "weight": t.weight, "reference": t.reference}
                for t in setup.objective.terms
            ],
        },
        "swarm": {**asdict(setup.swarm), "bounds": [list(b) for b in setup.swarm.bounds]},
        "gain_sets": [g._asdict() for g in setup.gain_sets],
    }
