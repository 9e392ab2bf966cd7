# src/netalgebra/modules/case_io.py

"""
JSON case files -> NetworkCase.

Parsing never stops at the first problem: every semantic issue found is
collected and raised together as one SemanticError. See docs/case_schema.md
for the format.
"""

from __future__ import annotations
import json
import logging
import math
from dataclasses import fields
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from .case import (
    BranchSpec,
    DeviceParams,
    Event,
    NetworkCase,
    NodeSpec,
    SimConfig,
    SourceAttachment,
    SourceKind,
)
from .devices import LoadParams, SlackParams, VscParams
from .errors import CaseIssue, CaseSyntaxError, IoError, NetAlgebraError, SemanticError
from .network import reduce_case

LOG = logging.getLogger(__name__)

SHIPPED_PACKAGE = "netalgebra.cases"
CASE_SUFFIX = ".json"

TOP_LEVEL_KEYS = {
    "name",
    "description",
    "notes",
    "base_frequency_hz",
    "nodes",
    "branches",
    "devices",
    "events",
    "sim",
}
NODE_KEYS = {"id", "devices", "label"}
BRANCH_KEYS = {"from", "to", "L", "label"}
EVENT_KEYS = {"time", "target", "field", "value"}
SIM_KEYS = {f.name for f in fields(SimConfig)}
LOAD_KEYS = {"r_load", "L_load", "p_load", "q_load", "v_nom"}
SLACK_KEYS = {"Lg", "u_g", "u_g_x", "u_g_y"}
VSC_KEYS = {f.name for f in fields(VscParams)}


class _Collector:
    def __init__(self) -> None:
        self.issues: List[CaseIssue] = []

    def add(self, kind: str, detail: str, path: str = "") -> None:
        self.issues.append(CaseIssue(kind, detail, path))

    def number(
        self,
        value: Any,
        path: str,
        positive: bool = False,
        positive_kind: str = "NonpositiveValue",
    ) -> Optional[float]:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.add("TypeError", f"expected a number, got {value!r}", path)
            return None
        if not math.isfinite(value):
            self.add("TypeError", f"expected a finite number, got {value!r}", path)
            return None
        if positive and not value > 0:
            self.add(positive_kind, f"must be > 0, got {value!r}", path)
            return None
        return float(value)

    def unknown_keys(self, obj: Mapping[str, Any], allowed: set, path: str) -> None:
        for key in obj:
            if key not in allowed:
                self.add("UnknownKey", f"unexpected key {key!r}", f"{path}.{key}")


def _as_id(value: Any) -> Optional[str]:
    if isinstance(value, bool):
        return None
    if isinstance(value, (str, int)):
        return str(value)
    return None


# ---------------- devices ----------------
def _parse_vsc(spec: Mapping[str, Any], path: str, out: _Collector) -> Optional[VscParams]:
    out.unknown_keys(spec, VSC_KEYS | {"kind"}, path)
    if "Lf" not in spec:
        out.add("MissingField", "VSC needs a filter inductance 'Lf'", path)
        return None
    values: Dict[str, Any] = {}
    ok = True
    for f in fields(VscParams):
        if f.name not in spec:
            continue
        raw = spec[f.name]
        where = f"{path}.{f.name}"
        if isinstance(f.default, bool):
            if not isinstance(raw, bool):
                out.add("TypeError", f"expected true/false, got {raw!r}", where)
                ok = False
            values[f.name] = raw
            continue
        positive = f.name == "Lf"
        num = out.number(raw, where, positive, "NonpositiveInductance")
        ok = ok and num is not None
        values[f.name] = num
    return VscParams(**values) if ok else None


def _parse_load(spec: Mapping[str, Any], path: str, out: _Collector) -> Optional[LoadParams]:
    out.unknown_keys(spec, LOAD_KEYS | {"kind"}, path)
    direct = "r_load" in spec or "L_load" in spec
    power = "p_load" in spec or "q_load" in spec
    if direct and power:
        out.add("ConflictingFields", "give either r_load/L_load or p_load/q_load", path)
        return None
    if direct:
        if "r_load" not in spec or "L_load" not in spec:
            out.add("MissingField", "load needs both 'r_load' and 'L_load'", path)
            return None
        r = out.number(spec["r_load"], f"{path}.r_load")
        L = out.number(spec["L_load"], f"{path}.L_load", True, "NonpositiveInductance")
        if r is not None and r < 0:
            out.add("NegativeResistance", f"r_load must be >= 0, got {r}", f"{path}.r_load")
            return None
        return LoadParams(r, L) if r is not None and L is not None else None
    if power:
        p = out.number(spec.get("p_load"), f"{path}.p_load")
        q = out.number(spec.get("q_load"), f"{path}.q_load", True, "NonpositiveInductance")
        v_nom = out.number(spec.get("v_nom", 1.0), f"{path}.v_nom", True)
        if p is None or q is None or v_nom is None:
            return None
        if p < 0:
            out.add("NegativeResistance", f"p_load must be >= 0, got {p}", f"{path}.p_load")
            return None
        return LoadParams.from_power(p, q, v_nom)
    out.add("MissingField", "load needs r_load/L_load or p_load/q_load", path)
    return None


def _parse_slack(spec: Mapping[str, Any], path: str, out: _Collector) -> Optional[SlackParams]:
    out.unknown_keys(spec, SLACK_KEYS | {"kind"}, path)
    if "Lg" not in spec:
        out.add("MissingField", "slack needs a grid inductance 'Lg'", path)
        return None
    Lg = out.number(spec["Lg"], f"{path}.Lg", True, "NonpositiveInductance")
    u_g: Tuple[Optional[float], Optional[float]] = (1.0, 0.0)
    if "u_g" in spec:
        raw = spec["u_g"]
        if not isinstance(raw, list) or len(raw) != 2:
            out.add("TypeError", f"u_g must be [x, y], got {raw!r}", f"{path}.u_g")
            return None
        u_g = (out.number(raw[0], f"{path}.u_g[0]"), out.number(raw[1], f"{path}.u_g[1]"))
    else:
        u_g = (
            out.number(spec.get("u_g_x", 1.0), f"{path}.u_g_x"),
            out.number(spec.get("u_g_y", 0.0), f"{path}.u_g_y"),
        )
    if Lg is None or u_g[0] is None or u_g[1] is None:
        return None
    return SlackParams(Lg, u_g[0], u_g[1])


def _parse_devices(raw: Any, out: _Collector) -> Dict[str, DeviceParams]:
    devices: Dict[str, DeviceParams] = {}
    if not isinstance(raw, dict) or not raw:
        out.add("SchemaError", "'devices' must be a non-empty object", "devices")
        return devices
    parsers = {"vsc": _parse_vsc, "load": _parse_load, "slack": _parse_slack}
    for dev_id, spec in raw.items():
        path = f"devices.{dev_id}"
        if not isinstance(spec, dict):
            out.add("SchemaError", "device entry must be an object", path)
            continue
        kind = spec.get("kind")
        if kind not in parsers:
            expected = f"kind must be one of {sorted(parsers)}, got {kind!r}"
            out.add("UnknownDeviceKind", expected, path)
            continue
        params = parsers[kind](spec, path, out)
        if params is not None:
            devices[dev_id] = params
    return devices


# ---------------- topology ----------------
def _parse_nodes(
    raw: Any, devices: Mapping[str, DeviceParams], declared: set, out: _Collector
) -> List[NodeSpec]:
    nodes: List[NodeSpec] = []
    if not isinstance(raw, list) or not raw:
        out.add("SchemaError", "'nodes' must be a non-empty list", "nodes")
        return nodes
    seen_nodes: set = set()
    attached: Dict[str, str] = {}
    for k, spec in enumerate(raw):
        path = f"nodes[{k}]"
        if not isinstance(spec, dict):
            out.add("SchemaError", "node entry must be an object", path)
            continue
        out.unknown_keys(spec, NODE_KEYS, path)
        node_id = _as_id(spec.get("id"))
        if node_id is None:
            out.add("MissingField", "node needs an 'id' (string or integer)", path)
            continue
        if node_id in seen_nodes:
            out.add("DuplicateNode", f"node id {node_id!r} declared twice", path)
            continue
        seen_nodes.add(node_id)

        dev_ids = spec.get("devices", [])
        if not isinstance(dev_ids, list):
            out.add("TypeError", "'devices' must be a list of device ids", f"{path}.devices")
            dev_ids = []
        attachments = []
        for dev_id in dev_ids:
            where = f"{path}.devices"
            if dev_id not in declared:
                out.add("MissingDevice", f"device {dev_id!r} is not declared", where)
                continue
            if dev_id in attached:
                out.add(
                    "DuplicateAttachment",
                    f"device {dev_id!r} already attached to node {attached[dev_id]!r}",
                    where,
                )
                continue
            attached[dev_id] = node_id
            params = devices.get(dev_id)
            if params is None:
                continue  # invalid device, already reported
            attachments.append(
                SourceAttachment(SourceKind(params.kind), params.series_inductance, dev_id)
            )
        nodes.append(NodeSpec(node_id, tuple(attachments)))

    for dev_id in sorted(declared - set(attached)):
        out.add("UnattachedDevice", f"device {dev_id!r} is not attached to any node", "devices")
    return nodes


def _parse_branches(raw: Any, node_ids: set, out: _Collector) -> List[BranchSpec]:
    branches: List[BranchSpec] = []
    if raw is None:
        return branches
    if not isinstance(raw, list):
        out.add("SchemaError", "'branches' must be a list", "branches")
        return branches
    seen: Dict[frozenset, int] = {}
    for k, spec in enumerate(raw):
        path = f"branches[{k}]"
        if not isinstance(spec, dict):
            out.add("SchemaError", "branch entry must be an object", path)
            continue
        out.unknown_keys(spec, BRANCH_KEYS, path)
        ends = (_as_id(spec.get("from")), _as_id(spec.get("to")))
        if None in ends:
            out.add("MissingField", "branch needs 'from' and 'to' node ids", path)
            continue
        a, b = ends
        bad = False
        for end in (a, b):
            if end not in node_ids:
                out.add("UnknownNode", f"branch references undeclared node {end!r}", path)
                bad = True
        if a == b:
            out.add("SelfLoopBranch", f"branch connects node {a!r} to itself", path)
            bad = True
        L = out.number(spec.get("L"), f"{path}.L", True, "NonpositiveInductance")
        key = frozenset((a, b))
        if not bad and key in seen:
            out.add(
                "DuplicateBranch",
                f"branch {a}-{b} repeats branches[{seen[key]}]; combine parallel branches",
                path,
            )
            bad = True
        seen.setdefault(key, k)
        if not bad and L is not None:
            branches.append(BranchSpec(a, b, L))  # type: ignore[arg-type]
    return branches


# ---------------- events / sim ----------------
def _parse_events(
    raw: Any, devices: Mapping[str, DeviceParams], declared: set, out: _Collector
) -> List[Event]:
    events: List[Event] = []
    if raw is None:
        return events
    if not isinstance(raw, list):
        out.add("SchemaError", "'events' must be a list", "events")
        return events
    for k, spec in enumerate(raw):
        path = f"events[{k}]"
        if not isinstance(spec, dict):
            out.add("SchemaError", "event entry must be an object", path)
            continue
        out.unknown_keys(spec, EVENT_KEYS, path)
        missing = sorted(EVENT_KEYS - set(spec))
        if missing:
            out.add("MissingField", f"event is missing {missing}", path)
            continue
        time = out.number(spec["time"], f"{path}.time")
        if time is not None and time < 0:
            out.add("InvalidEventTime", f"event time must be >= 0, got {time}", f"{path}.time")
            time = None
        target, name, value = spec["target"], spec["field"], spec["value"]
        device = devices.get(target) if isinstance(target, str) else None
        if device is None and isinstance(target, str) and target in declared:
            continue  # invalid device, already reported
        if device is None:
            out.add("UnknownTarget", f"event targets unknown device {target!r}", path)
            continue
        names = {f.name: f for f in fields(device)}
        steppable = isinstance(name, str) and name in names
        if not steppable or name in device.structural_fields:
            out.add(
                "UnknownField",
                f"{device.kind} {target!r} has no steppable field {name!r}",
                f"{path}.field",
            )
            continue
        if isinstance(names[name].default, bool):
            if not isinstance(value, bool):
                out.add("TypeError", f"expected true/false, got {value!r}", f"{path}.value")
                continue
        elif out.number(value, f"{path}.value") is None:
            continue
        if time is not None:
            events.append(Event(time, target, name, value))
    return events


def _parse_sim(raw: Any, out: _Collector) -> SimConfig:
    if raw is None:
        return SimConfig()
    if not isinstance(raw, dict):
        out.add("SchemaError", "'sim' must be an object", "sim")
        return SimConfig()
    out.unknown_keys(raw, SIM_KEYS, "sim")
    values = {k: v for k, v in raw.items() if k in SIM_KEYS}
    try:
        return SimConfig(**values)
    except (TypeError, ValueError) as exc:
        out.add("InvalidSimConfig", str(exc), "sim")
        return SimConfig()


# ---------------- entry points ----------------
def parse_case(text: str, source: str = "<string>") -> NetworkCase:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseSyntaxError(f"{source}: {exc.msg}", exc.lineno, exc.colno) from None

    out = _Collector()
    if not isinstance(doc, dict):
        out.add("SchemaError", "top level must be a JSON object")
        raise SemanticError(out.issues)
    out.unknown_keys(doc, TOP_LEVEL_KEYS, "$")

    declared = set(doc["devices"]) if isinstance(doc.get("devices"), dict) else set()
    devices = _parse_devices(doc.get("devices"), out)
    nodes = _parse_nodes(doc.get("nodes"), devices, declared, out)
    branches = _parse_branches(doc.get("branches"), {n.id for n in nodes}, out)
    events = _parse_events(doc.get("events"), devices, declared, out)
    sim = _parse_sim(doc.get("sim"), out)
    base_hz = out.number(doc.get("base_frequency_hz", 50.0), "base_frequency_hz", True)

    slacks = [d for d, p in devices.items() if isinstance(p, SlackParams)]
    if len(slacks) > 1:
        out.add("MultipleSlacks", f"exactly one slack allowed, found {sorted(slacks)}", "devices")
    elif not slacks and not any(i.path.startswith("devices.") for i in out.issues):
        out.add("MissingSlack", "a case needs exactly one slack device", "devices")

    notes = doc.get("notes", [])
    if not isinstance(notes, list) or not all(isinstance(n, str) for n in notes):
        out.add("TypeError", "'notes' must be a list of strings", "notes")
        notes = []

    if out.issues:
        raise SemanticError(out.issues)

    case = NetworkCase(
        nodes=tuple(nodes),
        branches=tuple(branches),
        devices=devices,
        events=tuple(events),
        sim=sim,
        base_frequency_hz=base_hz if base_hz is not None else 50.0,
        name=str(doc.get("name", Path(source).stem or "case")),
        notes=tuple(notes),
    )
    # topology checks that need the whole graph (connectivity, singularity)
    try:
        reduce_case(case)
    except NetAlgebraError as exc:
        raise SemanticError([CaseIssue(exc.kind, exc.detail, "nodes")]) from exc
    LOG.debug(
        "Parsed case %s: %d nodes, %d branches, %d devices, %d events",
        case.name,
        len(case.nodes),
        len(case.branches),
        len(case.devices),
        len(case.events),
    )
    return case


def load_case(path: Union[str, Path]) -> NetworkCase:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read case file {path}: {exc}") from exc
    return parse_case(text, source=str(path))


def shipped_case_names() -> List[str]:
    root = resources.files(SHIPPED_PACKAGE)
    return sorted(
        entry.name[: -len(CASE_SUFFIX)]
        for entry in root.iterdir()
        if entry.name.endswith(CASE_SUFFIX)
    )


def shipped_case_text(name: str) -> str:
    if name not in shipped_case_names():
        raise IoError(f"no shipped case named {name!r} (available: {shipped_case_names()})")
    return resources.files(SHIPPED_PACKAGE).joinpath(name + CASE_SUFFIX).read_text("utf-8")


def load_shipped_case(name: str) -> NetworkCase:
    return parse_case(shipped_case_text(name), source=name + CASE_SUFFIX)


def resolve_case(ref: Union[str, Path]) -> NetworkCase:
    """A path to a case file, or the name of a shipped case."""
    path = Path(ref)
    if path.exists():
        return load_case(path)
    if str(ref) in shipped_case_names():
        return load_shipped_case(str(ref))
    raise IoError(f"{ref}: no such case file or shipped case")
