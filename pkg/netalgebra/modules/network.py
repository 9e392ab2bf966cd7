# src/netalgebra/modules/network.py

"""
Nodal description of the pure-inductance network and its Kron reduction.

With line resistance and shunt capacitance neglected, setting the time
derivative of every node's current balance to zero turns the dynamic network
into the real linear system

    Y · u_t = Yfr · e        (applied identically to the x and y axes)

with Y_ii = Σ 1/L_ij + Σ 1/L_attach and Y_ij = -1/L_ij. ω0 cancels between
both sides and is factored out. Eliminating the intermediate (zero-injection)
nodes leaves

    u_t,s = Yr⁻¹ · Yf · e_s = M · e_s,   Yr = Ya - Yb · Yd⁻¹ · Yc

so the network acts as an instantaneous voltage divider between the sources'
internal voltages and their terminal voltages.
"""

from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.linalg as sla

from .case import (
    NetworkCase,
    SourceKind,
    XYPair,
    array_to_pairs,
    pairs_to_array,
)
from .devices import LOAD_STATE_NAMES, VSC_STATE_NAMES
from .errors import (
    DimensionMismatch,
    DisconnectedNode,
    DuplicateBranch,
    DuplicateNode,
    NonpositiveInductance,
    SelfLoopBranch,
    SingularIntermediateBlock,
    SingularNetwork,
    UnknownNode,
)

LOG = logging.getLogger(__name__)

_GROUND = "__internal_sources__"
_PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class AttachmentSlot:
    """One source attachment placed in the matrix ordering."""

    node_id: str
    row: int
    kind: SourceKind
    device_id: str
    admittance: float


@dataclass(frozen=True)
class FullAdmittance:
    Y: np.ndarray
    Yfr: np.ndarray
    B: np.ndarray  # n × attachments, admittance of each attachment at its node row
    ordering: Mapping[str, int]
    source_ids: Tuple[str, ...]
    intermediate_ids: Tuple[str, ...]
    attachments: Tuple[AttachmentSlot, ...]

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    def attachment_contributions(self) -> Dict[str, float]:
        return {a.device_id: a.admittance for a in self.attachments}


@dataclass(frozen=True)
class ReducedNetwork:
    Yr: np.ndarray
    Yf: np.ndarray
    M: np.ndarray
    attachment_divider: np.ndarray  # s × attachments, Yr⁻¹ · B_s
    source_ids: Tuple[str, ...]
    intermediate_ids: Tuple[str, ...]
    attachments: Tuple[AttachmentSlot, ...]
    Yc: np.ndarray
    yd_factor: Tuple[np.ndarray, np.ndarray] | None

    @property
    def s(self) -> int:
        return len(self.source_ids)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _check_connectivity(case: NetworkCase) -> None:
    graph = nx.Graph()
    graph.add_node(_GROUND)
    for node in case.nodes:
        graph.add_node(node.id)
        if node.attachments:
            graph.add_edge(_GROUND, node.id)
    for br in case.branches:
        graph.add_edge(br.from_node, br.to_node)

    for node in case.nodes:
        if graph.degree(node.id) == 0:
            raise DisconnectedNode(f"node {node.id!r} has no branches and no attachments")
    reachable = nx.node_connected_component(graph, _GROUND)
    stranded = [node.id for node in case.nodes if node.id not in reachable]
    if stranded:
        raise DisconnectedNode(
            f"nodes {stranded} form an island without any source attachment"
        )


def _validate_topology(case: NetworkCase) -> None:
    seen: set = set()
    for node in case.nodes:
        if node.id in seen:
            raise DuplicateNode(f"node id {node.id!r} declared twice")
        seen.add(node.id)
        for att in node.attachments:
            if not att.series_inductance > 0:
                raise NonpositiveInductance(
                    f"attachment {att.device_id!r} at node {node.id!r} has "
                    f"inductance {att.series_inductance}"
                )

    pairs: set = set()
    for br in case.branches:
        for end in (br.from_node, br.to_node):
            if end not in seen:
                raise UnknownNode(f"branch {br.from_node}-{br.to_node} references {end!r}")
        if br.from_node == br.to_node:
            raise SelfLoopBranch(f"branch {br.from_node}-{br.to_node} connects a node to itself")
        if not br.inductance > 0:
            raise NonpositiveInductance(
                f"branch {br.from_node}-{br.to_node} has inductance {br.inductance}"
            )
        if br.key in pairs:
            raise DuplicateBranch(
                f"second branch between {br.from_node} and {br.to_node}; "
                "combine parallel branches first"
            )
        pairs.add(br.key)


def assemble_full(case: NetworkCase) -> FullAdmittance:
    """Build Y and Yfr; sources first in declaration order, then intermediates."""
    _validate_topology(case)
    _check_connectivity(case)

    source_ids = tuple(n.id for n in case.nodes if n.attachments)
    intermediate_ids = tuple(n.id for n in case.nodes if not n.attachments)
    ordering = {nid: k for k, nid in enumerate(source_ids + intermediate_ids)}
    n = len(ordering)

    Y = np.zeros((n, n))
    for br in case.branches:
        i, j = ordering[br.from_node], ordering[br.to_node]
        y = 1.0 / br.inductance
        Y[i, i] += y
        Y[j, j] += y
        Y[i, j] -= y
        Y[j, i] -= y

    slots: List[AttachmentSlot] = []
    for node in case.nodes:
        row = ordering[node.id]
        for att in node.attachments:
            slots.append(
                AttachmentSlot(node.id, row, att.kind, att.device_id, att.admittance)
            )

    B = np.zeros((n, len(slots)))
    for col, slot in enumerate(slots):
        B[slot.row, col] = slot.admittance
    yfr_diag = B.sum(axis=1)
    Y[np.diag_indices(n)] += yfr_diag
    Yfr = np.diag(yfr_diag)

    LOG.debug(
        "Assembled %d-node admittance (%d sources, %d intermediates, %d attachments)",
        n,
        len(source_ids),
        len(intermediate_ids),
        len(slots),
    )
    return FullAdmittance(
        Y=_frozen(Y),
        Yfr=_frozen(Yfr),
        B=_frozen(B),
        ordering=dict(ordering),
        source_ids=source_ids,
        intermediate_ids=intermediate_ids,
        attachments=tuple(slots),
    )


def checked_lu_factor(
    matrix: np.ndarray, what: str, exc: type
) -> Tuple[np.ndarray, np.ndarray]:
    lu, piv = sla.lu_factor(matrix, check_finite=True)
    pivots = np.abs(np.diag(lu))
    scale = max(float(np.abs(matrix).max()), 1.0)
    if pivots.min() <= _PIVOT_RTOL * scale:
        raise exc(f"{what} is singular (smallest pivot {pivots.min():.3e})")
    return lu, piv


def partition_kron(full: FullAdmittance) -> ReducedNetwork:
    s = len(full.source_ids)
    src = np.arange(s)
    mid = np.arange(s, full.n)

    Ya = full.Y[np.ix_(src, src)]
    Yb = full.Y[np.ix_(src, mid)]
    Yc = full.Y[np.ix_(mid, src)]
    Yd = full.Y[np.ix_(mid, mid)]
    Bs = full.B[src, :]
    Yf = full.Yfr[np.ix_(src, src)].copy()

    yd_factor = None
    if mid.size:
        yd_factor = checked_lu_factor(
            Yd, "intermediate block Yd", SingularIntermediateBlock
        )
        Yr = Ya - Yb @ sla.lu_solve(yd_factor, Yc)
    else:
        Yr = Ya.copy()
    # Schur complement of a symmetric matrix is symmetric; drop the rounding skew.
    Yr = 0.5 * (Yr + Yr.T)

    yr_factor = checked_lu_factor(Yr, "reduced admittance Yr", SingularNetwork)
    M = sla.lu_solve(yr_factor, Yf)
    divider = sla.lu_solve(yr_factor, Bs)

    return ReducedNetwork(
        Yr=_frozen(Yr),
        Yf=_frozen(Yf),
        M=_frozen(M),
        attachment_divider=_frozen(divider),
        source_ids=full.source_ids,
        intermediate_ids=full.intermediate_ids,
        attachments=full.attachments,
        Yc=_frozen(Yc.copy()),
        yd_factor=yd_factor,
    )


def reduce_case(case: NetworkCase) -> Tuple[FullAdmittance, ReducedNetwork]:
    full = assemble_full(case)
    return full, partition_kron(full)


# ---------------- instantaneous algebraic relations ----------------
def terminal_voltage_array(net: ReducedNetwork, e_s: np.ndarray) -> np.ndarray:
    e_s = np.asarray(e_s, dtype=float)
    if e_s.shape != (net.s, 2):
        raise DimensionMismatch(
            f"expected {net.s} source internal voltages, got array of shape {e_s.shape}"
        )
    return net.M @ e_s


def terminal_voltages(net: ReducedNetwork, e_s: Sequence[XYPair]) -> List[XYPair]:
    """u_t,s = M · e_s per axis; one internal voltage per source node."""
    if len(e_s) != net.s:
        raise DimensionMismatch(f"expected {net.s} source internal voltages, got {len(e_s)}")
    return array_to_pairs(terminal_voltage_array(net, pairs_to_array(e_s)))


def source_internal_voltages(net: ReducedNetwork, e_att: np.ndarray) -> np.ndarray:
    """Admittance-weighted internal voltage per source node from per-attachment values."""
    e_att = np.asarray(e_att, dtype=float).reshape(-1, 2)
    if e_att.shape[0] != len(net.attachments):
        raise DimensionMismatch(
            f"expected {len(net.attachments)} attachment voltages, got {e_att.shape[0]}"
        )
    out = np.zeros((net.s, 2))
    for slot, e in zip(net.attachments, e_att):
        out[slot.row] += slot.admittance * e
    return out / np.diag(net.Yf)[:, None]


def intermediate_voltage_array(net: ReducedNetwork, u_ts: np.ndarray) -> np.ndarray:
    if net.yd_factor is None:
        return np.zeros((0, 2))
    return -sla.lu_solve(net.yd_factor, net.Yc @ np.asarray(u_ts, dtype=float))


def intermediate_voltages(
    net: ReducedNetwork, e_s: Sequence[XYPair], u_ts: Sequence[XYPair]
) -> List[XYPair]:
    """Back-substitute u_m = -Yd⁻¹ · Yc · u_s; intermediate rows carry no internal voltage."""
    if len(e_s) != net.s or len(u_ts) != net.s:
        raise DimensionMismatch(f"expected {net.s} source values")
    return array_to_pairs(intermediate_voltage_array(net, pairs_to_array(u_ts)))


def slack_injection(
    vsc_currents: Sequence[XYPair], load_currents: Sequence[XYPair]
) -> XYPair:
    """Kirchhoff boundary condition: Σ i_vsc + Σ i_load + i_g = 0."""
    total_x = sum(i.x for i in vsc_currents) + sum(i.x for i in load_currents)
    total_y = sum(i.y for i in vsc_currents) + sum(i.y for i in load_currents)
    return XYPair(-total_x + 0.0, -total_y + 0.0)


def dae_counts(case: NetworkCase) -> Tuple[int, int]:
    """(differential, algebraic) equation counts of the reduced model."""
    n_vsc = len(case.device_ids(SourceKind.VSC))
    n_load = len(case.device_ids(SourceKind.LOAD))
    n_source_nodes = sum(1 for n in case.nodes if n.attachments)
    n_differential = len(VSC_STATE_NAMES) * n_vsc + len(LOAD_STATE_NAMES) * n_load
    n_algebraic = 2 * n_source_nodes + 2
    return n_differential, n_algebraic


@dataclass(frozen=True)
class DividerProperties:
    row_sum_error: float
    min_entry: float
    y_symmetry_error: float
    yr_symmetry_error: float
    row_sum_identity_error: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "M row-sum error": self.row_sum_error,
            "M min entry": self.min_entry,
            "Y symmetry error": self.y_symmetry_error,
            "Yr symmetry error": self.yr_symmetry_error,
            "Y·1 - Yfr·1": self.row_sum_identity_error,
        }


def divider_properties(full: FullAdmittance, net: ReducedNetwork) -> DividerProperties:
    ones_n = np.ones(full.n)
    return DividerProperties(
        row_sum_error=float(np.abs(net.M.sum(axis=1) - 1.0).max()),
        min_entry=float(net.M.min()),
        y_symmetry_error=float(np.abs(full.Y - full.Y.T).max()),
        yr_symmetry_error=float(np.abs(net.Yr - net.Yr.T).max()),
        row_sum_identity_error=float(np.abs(full.Y @ ones_n - full.Yfr @ ones_n).max()),
    )

