"""
Steady-state gas transmission network: nodes with injections and squared-pressure bounds,
existing and candidate arcs.
"""
import numpy as np
from collections import defaultdict
from typing import NamedTuple, Optional, List, Dict, Tuple


PIPE = 'pipe'
RESISTOR = 'resistor'
SHORT_PIPE = 'short_pipe'
COMPRESSOR = 'compressor'
VALVE = 'valve'
CONTROL_VALVE = 'control_valve'

ARC_KINDS = [PIPE, RESISTOR, SHORT_PIPE, COMPRESSOR, VALVE, CONTROL_VALVE]
LOSSY_KINDS = [PIPE, RESISTOR]
RATIO_KINDS = [COMPRESSOR, VALVE, CONTROL_VALVE]

EXACTLY_ONE = 'exactly_one'
AT_MOST_ONE = 'at_most_one'
GROUP_MODES = [EXACTLY_ONE, AT_MOST_ONE]

BALANCE_TOL = 1e-6


class Node(NamedTuple):
    id: str
    q: float
    beta_lo: float
    beta_hi: float
    label: str = ''
    lat: Optional[float] = None
    lon: Optional[float] = None
    dummy: bool = False


class Arc(NamedTuple):
    id: str
    src: str
    dst: str
    kind: str
    w: float = 0.0
    alpha_lo: float = 1.0
    alpha_hi: float = 1.0
    bidirectional: bool = True
    candidate: bool = False
    cost: float = 0.0
    group: Optional[str] = None
    parallel_column: Optional[str] = None
    diameter: Optional[float] = None
    length: Optional[float] = None

    @property
    def lossy(self) -> bool:
        """ Pipe-like arcs carrying a Weymouth drop """
        return self.kind in LOSSY_KINDS

    @property
    def switchable(self) -> bool:
        """ Arcs whose flow is gated by a binary (candidates and valves) """
        return self.candidate or self.kind in (VALVE, CONTROL_VALVE)


class Violation(NamedTuple):
    code: str
    subject: str
    message: str
    residual: float = 0.0



class GasNetwork:
    """
    Immutable network. Arcs and nodes keep file order, which fixes variable order downstream.
    """
    def __init__(self, nodes: List[Node], arcs: List[Arc], groups: Optional[Dict[str, str]] = None):
        self._nodes = tuple(nodes)
        self._arcs = tuple(arcs)

        # Groups named by candidate arcs default to exactly-one
        group_modes = {a.group: EXACTLY_ONE for a in self._arcs if a.group is not None}
        group_modes.update(groups or {})
        self._groups = dict(sorted(group_modes.items()))

        self.node_index = {n.id: i for i, n in enumerate(self._nodes)}
        self.arc_index = {a.id: i for i, a in enumerate(self._arcs)}

        self._out, self._in = defaultdict(list), defaultdict(list)
        for a in self._arcs:
            self._out[a.src].append(a)
            self._in[a.dst].append(a)

    @property
    def nodes(self) -> Tuple[Node, ...]:
        return self._nodes

    @property
    def arcs(self) -> Tuple[Arc, ...]:
        return self._arcs

    @property
    def groups(self) -> Dict[str, str]:
        return dict(self._groups)

    def node(self, node_id: str) -> Node:
        return self._nodes[self.node_index[node_id]]

    def arc(self, arc_id: str) -> Arc:
        return self._arcs[self.arc_index[arc_id]]

    def arcs_out(self, node_id: str) -> List[Arc]:
        return list(self._out.get(node_id, []))

    def arcs_in(self, node_id: str) -> List[Arc]:
        return list(self._in.get(node_id, []))

    def degree(self, node_id: str) -> int:
        return len(self._out.get(node_id, [])) + len(self._in.get(node_id, []))

    @property
    def injections(self) -> List[Node]:
        return [n for n in self._nodes if n.q > 0]

    @property
    def demands(self) -> List[Node]:
        return [n for n in self._nodes if n.q < 0]

    @property
    def phi_max(self) -> float:
        """ Total injection, the big-M on every arc flow """
        return float(sum(n.q for n in self._nodes if n.q > 0))

    @property
    def num_physical_nodes(self) -> int:
        return sum(1 for n in self._nodes if not n.dummy)

    def existing(self, kinds=None) -> List[Arc]:
        return [a for a in self._arcs if not a.candidate and (kinds is None or a.kind in kinds)]

    def candidates(self, kinds=None) -> List[Arc]:
        return [a for a in self._arcs if a.candidate and (kinds is None or a.kind in kinds)]

    def group_members(self) -> Dict[str, List[Arc]]:
        members = {g: [] for g in self._groups}
        for a in self._arcs:
            if a.group is not None:
                members[a.group].append(a)
        return members

    def parallel_columns(self) -> Dict[str, List[Arc]]:
        cols = defaultdict(list)
        for a in self._arcs:
            if a.parallel_column is not None:
                cols[a.parallel_column].append(a)
        return dict(cols)

    def parallel_pairs(self) -> List[Tuple[Arc, Arc]]:
        """
        Pairs of lossy arcs (existing or candidate) joining the same two nodes. Consecutive pairs only,
        so a bundle of k arcs yields k-1 pairs.
        """
        bundles = defaultdict(list)
        for a in self._arcs:
            if a.lossy:
                bundles[frozenset((a.src, a.dst))].append(a)
        pairs = []
        for bundle in bundles.values():
            pairs.extend(zip(bundle[:-1], bundle[1:]))
        return pairs

    def with_loads(self, loads: Dict[str, float]) -> 'GasNetwork':
        nodes = [n._replace(q=float(loads[n.id])) if n.id in loads else n for n in self._nodes]
        return GasNetwork(nodes, self._arcs, self._groups)

    def with_nodes(self, nodes: List[Node]) -> 'GasNetwork':
        return GasNetwork(nodes, self._arcs, self._groups)

    def with_arcs(self, arcs: List[Arc], groups: Optional[Dict[str, str]] = None) -> 'GasNetwork':
        return GasNetwork(self._nodes, arcs, groups)

    def __eq__(self, other):
        if not isinstance(other, GasNetwork):
            return NotImplemented
        return self._nodes == other._nodes and self._arcs == other._arcs and self._groups == other._groups

    def __repr__(self):
        return f"GasNetwork(nodes={len(self._nodes)}, arcs={len(self._arcs)}, candidates={len(self.candidates())})"



def validate(network: GasNetwork) -> List[Violation]:
    """
    Every invariant violation of the network, empty list iff valid.

    Parameters:
    -----------
        network: GasNetwork
            Network to check

    Returns:
    -------
    list
        Violation records with machine-readable codes
    """
    violations = []

    seen = set()
    for n in network.nodes:
        if n.id in seen:
            violations.append(Violation('DuplicateId', n.id, f"Node id {n.id} used twice"))
        seen.add(n.id)
        if not np.isfinite(n.q):
            violations.append(Violation('BoundsViolation', n.id, f"Injection of node {n.id} is not finite"))
        if not (0 <= n.beta_lo <= n.beta_hi) or not np.isfinite(n.beta_hi):
            violations.append(Violation('BoundsViolation', n.id,
                                        f"Node {n.id} needs 0 <= beta_lo <= beta_hi, got [{n.beta_lo}, {n.beta_hi}]"))

    qs = [n.q for n in network.nodes if np.isfinite(n.q)]
    if qs:
        residual = float(sum(qs))
        scale = max(abs(q) for q in qs)
        if abs(residual) > BALANCE_TOL * max(scale, 1e-12) and abs(residual) > 0:
            violations.append(Violation('BalanceViolation', '', f"Injections sum to {residual}", residual))

    seen = set()
    for a in network.arcs:
        if a.id in seen:
            violations.append(Violation('DuplicateId', a.id, f"Arc id {a.id} used twice"))
        seen.add(a.id)

        for end in (a.src, a.dst):
            if end not in network.node_index:
                violations.append(Violation('DanglingEndpoint', a.id, f"Arc {a.id} references unknown node {end}"))
        if a.src == a.dst:
            violations.append(Violation('SelfLoop', a.id, f"Arc {a.id} starts and ends at {a.src}"))
        if a.kind not in ARC_KINDS:
            violations.append(Violation('ResistanceViolation', a.id, f"Arc {a.id} has unknown kind {a.kind}"))
        elif a.lossy and not a.w > 0:
            violations.append(Violation('ResistanceViolation', a.id, f"{a.kind} {a.id} needs w > 0, got {a.w}"))
        elif not a.lossy and a.w != 0:
            violations.append(Violation('ResistanceViolation', a.id, f"Lossless {a.kind} {a.id} needs w = 0"))

        if a.kind == COMPRESSOR and not (0 < a.alpha_lo <= a.alpha_hi):
            violations.append(Violation('RatioViolation', a.id, f"Compressor {a.id} needs 0 < alpha_lo <= alpha_hi"))
        if a.kind == VALVE and not (a.alpha_lo == 1 and a.alpha_hi == 1):
            violations.append(Violation('RatioViolation', a.id, f"Valve {a.id} needs alpha_lo = alpha_hi = 1"))
        if a.kind == CONTROL_VALVE and not (0 < a.alpha_lo <= a.alpha_hi <= 1):
            violations.append(Violation('RatioViolation', a.id, f"Control valve {a.id} needs 0 < alpha_lo <= alpha_hi <= 1"))

        if a.cost < 0 or not np.isfinite(a.cost):
            violations.append(Violation('CostViolation', a.id, f"Arc {a.id} has cost {a.cost}"))

        if a.group is not None and not (a.candidate and a.lossy):
            violations.append(Violation('GroupViolation', a.id, f"Group {a.group} holds {a.id}, which is not a candidate pipe"))
        if a.parallel_column is not None and not (a.candidate and a.lossy):
            violations.append(Violation('GroupViolation', a.id, f"Column link on {a.id}, which is not a candidate pipe"))

    for g, mode in network.groups.items():
        if mode not in GROUP_MODES:
            violations.append(Violation('GroupViolation', g, f"Group {g} has unknown mode {mode}"))

    return violations
