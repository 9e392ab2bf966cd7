# tests/conftest.py

import json
import math
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import pytest

from netalgebra.modules.case import (
    BranchSpec,
    Event,
    NetworkCase,
    NodeSpec,
    SimConfig,
    SourceAttachment,
    SourceKind,
)
from netalgebra.modules.case_io import load_shipped_case, parse_case
from netalgebra.modules.devices import LoadParams, SlackParams, VscParams

OMEGA0 = 100.0 * math.pi


def build_case(
    nodes: Mapping[str, Sequence[str]],
    branches: Iterable[Tuple[str, str, float]],
    devices: Mapping[str, object],
    events: Sequence[Event] = (),
    sim: Optional[SimConfig] = None,
    name: str = "test",
) -> NetworkCase:
    """NetworkCase from {node: [device ids]} without going through the parser."""
    specs = []
    for node_id, dev_ids in nodes.items():
        atts = tuple(
            SourceAttachment(
                SourceKind(devices[d].kind), devices[d].series_inductance, d
            )
            for d in dev_ids
        )
        specs.append(NodeSpec(node_id, atts))
    return NetworkCase(
        nodes=tuple(specs),
        branches=tuple(BranchSpec(a, b, L) for a, b, L in branches),
        devices=dict(devices),
        events=tuple(events),
        sim=sim or SimConfig(),
        name=name,
    )


def single_bus_case(Lf: float = 0.01, Lg: float = 0.01, **vsc) -> NetworkCase:
    devices: Dict[str, object] = {
        "vsc1": VscParams(Lf=Lf, **vsc),
        "grid": SlackParams(Lg=Lg),
    }
    return build_case({"1": ["vsc1", "grid"]}, [], devices, name="single")


def chain_case() -> NetworkCase:
    """A(attach 0.01) -0.1- m -0.1- B(attach 0.01)."""
    devices = {"vsc1": VscParams(Lf=0.01), "grid": SlackParams(Lg=0.01)}
    return build_case(
        {"A": ["vsc1"], "m": [], "B": ["grid"]},
        [("A", "m", 0.1), ("m", "B", 0.1)],
        devices,
        name="chain",
    )


def load_bus_case(feedforward: bool = False) -> NetworkCase:
    """VSC, load and grid on three buses through one intermediate node."""
    devices = {
        "grid": SlackParams(Lg=0.02),
        "vsc1": VscParams(Lf=0.01, id_ref=0.8, iq_ref=0.1, feedforward_enabled=feedforward),
        "load1": LoadParams(r_load=1.2, L_load=0.4),
    }
    return build_case(
        {"g": ["grid"], "v": ["vsc1"], "l": ["load1"], "m": []},
        [("g", "m", 0.05), ("v", "m", 0.06), ("l", "m", 0.08)],
        devices,
        name="three_bus",
    )


@pytest.fixture
def case_builder():
    return build_case


@pytest.fixture
def single_bus():
    return single_bus_case()


@pytest.fixture
def chain():
    return chain_case()


@pytest.fixture
def three_bus():
    return load_bus_case()


@pytest.fixture(scope="session")
def nine_bus():
    return load_shipped_case("nine_bus")


@pytest.fixture(scope="session")
def nine_bus_no_loads():
    return load_shipped_case("nine_bus_no_loads")


@pytest.fixture(scope="session")
def single_vsc():
    return load_shipped_case("single_vsc")


@pytest.fixture
def case_doc():
    """A small valid case document; tests mutate it to produce malformed ones."""
    return {
        "name": "doc",
        "base_frequency_hz": 50.0,
        "devices": {
            "grid": {"kind": "slack", "Lg": 0.01, "u_g": [1.0, 0.0]},
            "vsc1": {"kind": "vsc", "Lf": 0.01, "id_ref": 1.0},
            "load1": {"kind": "load", "r_load": 1.0, "L_load": 0.5},
        },
        "nodes": [
            {"id": "1", "devices": ["grid"]},
            {"id": "2", "devices": ["vsc1"]},
            {"id": "3", "devices": ["load1"]},
            {"id": "4"},
        ],
        "branches": [
            {"from": "1", "to": "4", "L": 0.05},
            {"from": "2", "to": "4", "L": 0.05},
            {"from": "3", "to": "4", "L": 0.05},
        ],
        "events": [{"time": 0.1, "target": "vsc1", "field": "id_ref", "value": 1.2}],
        "sim": {"dt": 2e-05, "t_end": 0.2, "record_stride": 50},
    }


@pytest.fixture
def parse_doc():
    def _parse(doc):
        return parse_case(json.dumps(doc, indent=2))

    return _parse
