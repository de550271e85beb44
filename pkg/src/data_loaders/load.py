"""
Instance files: JSON text <-> GasNetwork, plus load scaling and sweep candidates.
"""
import json
from typing import Dict, Tuple, Callable, Optional

from network.gas_network import GasNetwork, Node, Arc, validate, LOSSY_KINDS, PIPE
from network.physics import pipe_resistance, expansion_cost
from utils.utils_run import InstanceSyntaxError, InstanceSemanticError, DomainError


SCHEMA_VERSION = 1

ARC_DEFAULTS = {
    'alpha_lo': 1.0,
    'alpha_hi': 1.0,
    'bidirectional': True,
    'candidate': False,
    'cost': 0.0,
    'group': None,
    'parallel_column': None,
    'diameter': None,
    'length': None,
}



def _node_from_dict(d: Dict) -> Node:
    if 'beta_lo' in d:
        beta_lo, beta_hi = float(d['beta_lo']), float(d['beta_hi'])
    else:
        beta_lo, beta_hi = float(d['p_lo']) ** 2, float(d['p_hi']) ** 2

    return Node(id=str(d['id']), q=float(d['q']), beta_lo=beta_lo, beta_hi=beta_hi,
                label=d.get('label', ''), lat=d.get('lat'), lon=d.get('lon'), dummy=bool(d.get('dummy', False)))


def _arc_from_dict(d: Dict) -> Arc:
    kind = d['kind']
    fields = {k: d.get(k, v) for k, v in ARC_DEFAULTS.items()}

    if 'w' in d:
        w = float(d['w'])
    elif kind in LOSSY_KINDS and fields['diameter'] is not None and fields['length'] is not None:
        w = pipe_resistance(float(fields['diameter']), float(fields['length']))
    else:
        w = 0.0

    for k in ('alpha_lo', 'alpha_hi', 'cost'):
        fields[k] = float(fields[k])
    for k in ('diameter', 'length'):
        fields[k] = None if fields[k] is None else float(fields[k])
    for k in ('group', 'parallel_column'):
        fields[k] = None if fields[k] is None else str(fields[k])

    return Arc(id=str(d['id']), src=str(d['from']), dst=str(d['to']), kind=kind, w=w, **fields)



def network_from_dict(data: Dict) -> GasNetwork:
    """ Build and validate; raises InstanceSemanticError on any violation """
    try:
        nodes = [_node_from_dict(n) for n in data['nodes']]
        arcs = [_arc_from_dict(a) for a in data.get('arcs', [])]
        groups = {str(g['id']): g.get('mode', 'exactly_one') for g in data.get('groups', [])}
    except (KeyError, TypeError, ValueError) as e:
        raise InstanceSyntaxError(f"Malformed instance entry: {e!r}")
    except DomainError as e:
        raise InstanceSyntaxError(f"Bad pipe geometry: {e}")

    network = GasNetwork(nodes, arcs, groups)
    violations = validate(network)
    if violations:
        raise InstanceSemanticError(violations)

    return network



def network_to_dict(network: GasNetwork, metadata: Optional[Dict] = None) -> Dict:
    nodes = []
    for n in network.nodes:
        d = {'id': n.id, 'q': n.q, 'beta_lo': n.beta_lo, 'beta_hi': n.beta_hi}
        if n.label:
            d['label'] = n.label
        if n.lat is not None:
            d['lat'], d['lon'] = n.lat, n.lon
        if n.dummy:
            d['dummy'] = True
        nodes.append(d)

    arcs = []
    for a in network.arcs:
        d = {'id': a.id, 'from': a.src, 'to': a.dst, 'kind': a.kind, 'w': a.w}
        for k, default in ARC_DEFAULTS.items():
            val = getattr(a, k)
            if val != default:
                d[k] = val
        arcs.append(d)

    return {
        'schema_version': SCHEMA_VERSION,
        'metadata': dict(metadata or {}),
        'nodes': nodes,
        'arcs': arcs,
        'groups': [{'id': g, 'mode': m} for g, m in network.groups.items()],
    }



def parse_instance(text: str) -> Tuple[GasNetwork, Dict]:
    """
    Parse instance text into a validated network and its metadata

    Parameters:
    -----------
        text: str
            JSON instance file contents

    Returns:
    -------
    tuple
        (GasNetwork, metadata dict)
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceSyntaxError(e.msg, e.lineno, e.colno)

    if not isinstance(data, dict) or 'nodes' not in data:
        raise InstanceSyntaxError("Instance must be an object with a 'nodes' list", 1, 1)
    if data.get('schema_version', SCHEMA_VERSION) != SCHEMA_VERSION:
        raise InstanceSyntaxError(f"Unsupported schema_version {data['schema_version']}", 1, 1)

    return network_from_dict(data), data.get('metadata', {})


def parse(text: str) -> GasNetwork:
    return parse_instance(text)[0]


def serialize(network: GasNetwork, metadata: Optional[Dict] = None) -> str:
    return json.dumps(network_to_dict(network, metadata), indent=2, ensure_ascii=False) + "\n"



def apply_stress(network: GasNetwork, factor: float) -> GasNetwork:
    """
    Scale every injection and demand by `factor`. Bounds and arcs are untouched.
    """
    if not factor > 0:
        raise DomainError(f"Stress factor must be positive, got {factor}")
    return network.with_loads({n.id: n.q * factor for n in network.nodes})



def sweep_cost(arc: Arc) -> float:
    """ Cost of duplicating an existing pipe, from its geometry """
    if arc.diameter is None or arc.length is None:
        raise DomainError(f"Pipe {arc.id} has no diameter/length to price a parallel candidate")
    return expansion_cost(arc.diameter, arc.length)


def add_parallel_candidates(network: GasNetwork, cost_fn: Callable[[Arc], float] = sweep_cost,
                            costs: Optional[Dict[str, float]] = None) -> GasNetwork:
    """
    Keep the existing arcs, drop every candidate and add one parallel candidate per existing pipe.

    :param costs: optional arc id -> cost overrides (e.g. from the instance metadata)
    """
    costs = costs or {}
    arcs = [a for a in network.arcs if not a.candidate]
    for a in network.existing(kinds=[PIPE]):
        cost = costs[a.id] if a.id in costs else cost_fn(a)
        arcs.append(a._replace(id=f"{a.id}+", candidate=True, cost=float(cost), group=None, parallel_column=None))

    return network.with_arcs(arcs, groups={})
