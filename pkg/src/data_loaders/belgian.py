"""
Belgian gas network benchmark instances.

Base network (20 towns, 24 pipes, 3 compressors) from the appendix of De Wolf & Smeers,
"The gas transmission problem solved by an extension of the simplex algorithm",
Management Science 46(11), 2000. Diameter choices and load profiles for the
"optimization from scratch" variants follow Babonneau, Nesterov & Vial, "Design and
operations of gas transmission networks", Operations Research 60(1), 2012.

Zero-length compressor arcs use a dummy outlet node named `<node>*`.
"""
from typing import Dict, List, Tuple

from network.gas_network import GasNetwork, Node, Arc, PIPE, COMPRESSOR, EXACTLY_ONE, AT_MOST_ONE
from network.physics import pipe_resistance, expansion_cost
from utils.utils_run import UnknownInstance


SOURCE_BASE = "De Wolf & Smeers (2000), Management Science 46(11), appendix: Belgian network"
SOURCE_SCRATCH = "Babonneau, Nesterov & Vial (2012), Operations Research 60(1): Belgian network from scratch"

COMPRESSOR_RATIO = 2.0
COMPRESSOR_COST = 1500.0

# id: (town, q, p_lo, p_hi)
BELGIAN_NODES = {
    '1': ('Zeebrugge', 10.911288, 0.0, 77.0),
    '2': ('Dudzele', 8.4, 0.0, 77.0),
    '3': ('Brugge', -3.918, 30.0, 80.0),
    '4': ('Zomergem', 0.0, 0.0, 80.0),
    '5': ('Loenhout', 2.814712, 0.0, 77.0),
    '6': ('Antwerp', -4.034, 30.0, 80.0),
    '7': ('Ghent', -5.256, 30.0, 80.0),
    '8': ('Voeren', 22.012, 50.0, 66.2),
    '9': ('Berneau', 0.0, 0.0, 66.2),
    '10': ('Liège', -6.365, 30.0, 66.2),
    '11': ('Warnand', 0.0, 0.0, 66.2),
    '12': ('Namur', -2.12, 0.0, 66.2),
    '13': ('Anderlues', 1.2, 0.0, 66.2),
    '14': ('Péronnes', 0.96, 0.0, 66.2),
    '15': ('Mons', -6.848, 0.0, 66.2),
    '16': ('Blaregnies', -15.616, 50.0, 66.2),
    '17': ('Wanze', 0.0, 0.0, 66.2),
    '18': ('Sinsin', 0.0, 0.0, 63.0),
    '19': ('Arlon', -0.222, 0.0, 66.2),
    '20': ('Pétange', -1.919, 25.0, 66.2),
}

# Upper pressure bound of Berneau per variant
NODE_9_P_HI = {'A': 66.2, 'A1': 59.851968, 'A2': 59.0, 'A3': 59.85}

# (id, from, to, length km, diameter mm)
BASE_PIPES = [
    ('1-2A', '1', '2', 4.0, 890.0),
    ('1-2B', '1', '2', 4.0, 890.0),
    ('2-3A', '2', '3', 6.0, 890.0),
    ('2-3B', '2', '3', 6.0, 890.0),
    ('3-4', '3', '4', 26.0, 890.0),
    ('5-6', '5', '6', 43.0, 590.1),
    ('6-7', '6', '7', 29.0, 590.1),
    ('7-4', '7', '4', 19.0, 590.1),
    ('4-14', '4', '14', 55.0, 890.0),
    ('8-9A', '8', '9', 5.0, 890.0),
    ('8-9B', '8', '9', 5.0, 395.5),
    ('9-10A', '9', '10', 20.0, 890.0),
    ('9-10B', '9', '10', 20.0, 395.5),
    ('10-11A', '10', '11', 25.0, 890.0),
    ('10-11B', '10', '11', 25.0, 395.5),
    ('11-12', '11', '12', 42.0, 890.0),
    ('12-13', '12', '13', 40.0, 890.0),
    ('13-14', '13', '14', 5.0, 890.0),
    ('14-15', '14', '15', 10.0, 890.0),
    ('15-16', '15', '16', 25.0, 890.0),
    ('11-17', '11', '17', 10.5, 395.5),
    ('17-18', '17', '18', 26.0, 315.5),
    ('18-19', '18', '19', 98.0, 315.5),
    ('19-20', '19', '20', 6.0, 315.5),
]

# Compressor stations: (id, inlet, outlet). Voeren and Wanze feed a dummy outlet.
BASE_COMPRESSORS = [
    ('c8', '8', '8*'),
    ('c17', '17', '17*'),
    ('c1', '1', '2'),
]

# Pipes whose inlet moves to the compressor outlet in the A networks
DUMMY_INLETS = {'8-9A': '8*', '8-9B': '8*', '17-18': '17*'}

# Expansion plans: new nodes (id, town, lat, lon, p_lo, p_hi) and candidates (from, to, w | None, cost).
# w None marks a compressor from a node to its dummy outlet.
EXPANSIONS = {
    'A1': {
        'nodes': [
            ('21', 'Bois', 50.400676, 5.855991, 14.0, 66.0),
            ('22', 'Koninklijke', 50.806672, 4.481877, 14.0, 66.0),
        ],
        'arcs': [
            ('9', '21', 0.929, 67.19),
            ('21', '18', 0.808, 77.26),
            ('6', '22', 0.785, 79.50),
            ('22', '14', 0.766, 81.44),
        ],
    },
    'A2': {
        'nodes': [
            ('21', 'Heist', 51.095651, 4.744616, 20.0, 70.0),
            ('22', 'Zoutleeuw', 50.858734, 5.115404, 20.0, 70.0),
            ('23', 'Beaufays', 50.552195, 5.670182, 20.0, 70.0),
            ('24', 'Gouvy', 50.231757, 5.966813, 20.0, 70.0),
            ('25', 'Ettelbruck', 49.861370, 6.073930, 20.0, 70.0),
        ],
        'arcs': [
            ('5', '21', 1.052, 59.29),
            ('21', '21*', None, COMPRESSOR_COST),
            ('22', '11', 0.967, 64.52),
            ('8', '23', 1.933, 32.28),
            ('23', '24', 0.876, 71.18),
            ('24', '24*', None, COMPRESSOR_COST),
            ('25', '19', 1.339, 46.59),
            ('21*', '22', 0.980, 63.65),
            ('24*', '25', 0.866, 72.08),
        ],
    },
    'A3': {
        'nodes': [
            ('21', 'Jabbeke', 51.204699, 3.086440, 14.0, 66.0),
            ('22', 'Torhout', 51.072867, 3.118026, 14.0, 66.0),
            ('23', 'Kortrijk', 50.790711, 3.230636, 14.0, 66.0),
            ('24', 'Bois-de-Barry', 50.580151, 3.521773, 14.0, 66.0),
            ('25', 'Lobbes', 50.353208, 4.263261, 20.0, 70.0),
            ('26', 'Senzeille', 50.124840, 4.433550, 20.0, 70.0),
            ('27', 'Gedinne', 49.980230, 4.851030, 20.0, 70.0),
            ('28', 'Chiny', 49.806832, 5.274004, 20.0, 70.0),
            ('29', 'Pigneule', 49.735878, 5.471758, 20.0, 70.0),
        ],
        'arcs': [
            ('1', '21', 2.257, 27.65),
            ('2', '21', 4.546, 13.73),
            ('21', '21*', None, COMPRESSOR_COST),
            ('22', '23', 1.121, 55.66),
            ('23', '23*', None, COMPRESSOR_COST),
            ('24', '15', 1.073, 58.14),
            ('15', '25', 1.483, 42.09),
            ('25', '26', 1.289, 48.40),
            ('26', '26*', None, COMPRESSOR_COST),
            ('27', '28', 1.010, 61.79),
            ('28', '29', 2.232, 27.96),
            ('29', '19', 1.423, 42.09),
            ('21*', '22', 2.448, 25.50),
            ('23*', '24', 1.165, 53.56),
            ('26*', '27', 1.071, 58.28),
        ],
    },
}

# Loads of the from-scratch variants B1..B4, node -> (B1, B2, B3, B4)
LOAD_PROFILES = {
    '1': (9.5883, 9.8225, 9.8218, 9.7205),
    '2': (8.1833, 8.3447, 8.1340, 8.3628),
    '3': (-3.9180, -3.9180, -3.9180, -3.9180),
    '4': (0.0, 0.0, 0.0, 0.0),
    '5': (4.0315, 4.0432, 4.0383, 4.0364),
    '6': (-4.0315, -4.0432, -4.0383, -4.0364),
    '7': (-5.2413, -5.2644, -5.2562, -5.2644),
    '8': (22.012, 22.0120, 22.0120, 22.0120),
    '9': (0.0, 0.0, 0.0, 0.0),
    '10': (-6.4744, -6.4951, -6.3970, -6.3816),
    '11': (0.0, 0.0, 0.0, 0.0),
    '12': (-2.1929, -2.1191, -2.1162, -2.0984),
    '13': (1.2162, 1.3225, 1.0802, 1.1591),
    '14': (0.9840, 0.6164, 1.0776, 1.0235),
    '15': (-6.4056, -6.5885, -6.8366, -6.8857),
    '16': (-15.6119, -15.5904, -15.4616, -15.5899),
    '17': (0.0, 0.0, 0.0, 0.0),
    '18': (0.0, 0.0, 0.0, 0.0),
    '19': (-0.2059, -0.2312, -0.2269, -0.2164),
    '20': (-1.9337, -1.9112, -1.9131, -1.9236),
}
# Rounding residual of the published profiles goes to the largest source
SLACK_NODE = '8'

# Diameter choices D1..D5 (mm) per corridor row; None marks "no pipe"
DIAMETER_CHOICES = [
    ('1-2A', (890.0, 650.3, 610.8, 524.7, 512.1)),
    ('1-2B', (890.0, 650.3, 610.8, 524.7, 512.1)),
    ('2-3A', (890.0, 834.7, 784.0, 673.5, 657.3)),
    ('2-3B', (890.0, 834.7, 784.0, 673.5, 657.3)),
    ('3-4', (890.0, 998.9, 938.3, 806.0, 786.7)),
    ('5-6', (590.1, 604.3, 567.6, 487.6, 475.9)),
    ('6-7', (590.1, None, None, None, None)),
    ('7-4', (590.1, 671.7, 630.9, 542.0, 529.0)),
    ('4-14', (890.0, 829.9, 779.5, 669.7, 653.6)),
    ('8-9A', (890.0, 902.8, 848.0, 728.4, 711.0)),
    ('8-9B', (395.5, 902.8, 848.0, 728.4, 711.0)),
    ('9-10A', (890.0, 902.8, 848.0, 728.4, 710.9)),
    ('9-10B', (395.5, 902.8, 848.0, 728.4, 711.0)),
    ('10-11A', (890.0, 787.6, 739.8, 635.5, 620.1)),
    ('10-11B', (395.5, 787.6, 739.8, 635.5, 620.4)),
    ('11-12', (890.0, 979.8, 920.3, 790.6, 771.6)),
    ('12-13', (890.0, 915.1, 859.6, 738.4, 720.7)),
    ('13-14', (890.0, 952.6, 894.7, 768.6, 750.1)),
    ('14-15', (890.0, 1201.0, 1128.0, 969.0, 945.8)),
    ('15-16', (890.0, 1038.4, 975.3, 837.9, 817.7)),
    ('11-17', (395.5, 469.0, 440.5, 378.4, 369.3)),
    ('17-18', (315.5, 469.0, 440.5, 378.4, 369.3)),
    ('18-19', (315.5, 469.0, 440.5, 378.4, 369.3)),
    ('19-20', (315.5, 448.9, 421.7, 362.2, 353.5)),
]

# Candidate compressor corridors and ratio choices of the from-scratch variants
SCRATCH_COMPRESSORS = [('8', '9'), ('17', '18'), ('1', '2')]
SCRATCH_RATIOS = (1.0, 1.1, 1.2, 1.3)



def _base_nodes(p_hi_9: float) -> List[Node]:
    nodes = []
    for nid, (town, q, p_lo, p_hi) in BELGIAN_NODES.items():
        if nid == '9':
            p_hi = p_hi_9
        nodes.append(Node(id=nid, q=q, beta_lo=p_lo ** 2, beta_hi=p_hi ** 2, label=town))
    return nodes


def _dummy_node(of: Node) -> Node:
    return Node(id=f"{of.id}*", q=0.0, beta_lo=of.beta_lo, beta_hi=of.beta_hi,
                label=f"{of.label} (compressor outlet)", lat=of.lat, lon=of.lon, dummy=True)


def _base_pipe(pid: str, src: str, dst: str, length: float, diameter: float) -> Arc:
    return Arc(id=pid, src=src, dst=dst, kind=PIPE, w=pipe_resistance(diameter, length),
               diameter=diameter, length=length)


def _compressor(cid: str, src: str, dst: str, alpha_hi: float = COMPRESSOR_RATIO, **kwargs) -> Arc:
    return Arc(id=cid, src=src, dst=dst, kind=COMPRESSOR, alpha_lo=1.0, alpha_hi=alpha_hi, **kwargs)



def base_network(variant: str = 'A') -> Tuple[List[Node], List[Arc]]:
    """
    Nodes and arcs of the installed Belgian network, compressor dummies included
    """
    nodes = _base_nodes(NODE_9_P_HI[variant])
    by_id = {n.id: n for n in nodes}
    nodes += [_dummy_node(by_id['8']), _dummy_node(by_id['17'])]

    arcs = []
    for pid, src, dst, length, diameter in BASE_PIPES:
        arcs.append(_base_pipe(pid, DUMMY_INLETS.get(pid, src), dst, length, diameter))
    for cid, src, dst in BASE_COMPRESSORS:
        arcs.append(_compressor(cid, src, dst))

    return nodes, arcs



def belgian_instance(name: str) -> Tuple[GasNetwork, Dict]:
    """
    Build belgian-A, -A1, -A2 or -A3

    Parameters:
    -----------
        name: str
            Instance name, e.g. 'belgian-A2'

    Returns:
    -------
    tuple
        (GasNetwork, metadata)
    """
    variant = name.split('-', 1)[-1]
    if variant not in NODE_9_P_HI:
        raise UnknownInstance(f"Unknown Belgian instance {name}")

    nodes, arcs = base_network(variant)
    notes = "Base network; compressors at Voeren, Wanze and Zeebrugge"

    if variant in EXPANSIONS:
        plan = EXPANSIONS[variant]
        new_nodes = [Node(id=nid, q=0.0, beta_lo=p_lo ** 2, beta_hi=p_hi ** 2, label=town, lat=lat, lon=lon)
                     for nid, town, lat, lon, p_lo, p_hi in plan['nodes']]
        by_id = {n.id: n for n in new_nodes}
        for src, dst, w, cost in plan['arcs']:
            if w is None:
                new_nodes.append(_dummy_node(by_id[src]))
                arcs.append(_compressor(f"n{src}-{dst}", src, dst, candidate=True, cost=cost))
            else:
                arcs.append(Arc(id=f"n{src}-{dst}", src=src, dst=dst, kind=PIPE, w=w, candidate=True, cost=cost))
        nodes += new_nodes
        notes = f"Expansion plan {variant}; Berneau upper pressure {NODE_9_P_HI[variant]} bar"

    metadata = {'name': f"belgian-{variant}", 'source': SOURCE_BASE, 'notes': notes}
    return GasNetwork(nodes, arcs), metadata



def scratch_loads(variant: int) -> Dict[str, float]:
    loads = {nid: profile[variant - 1] for nid, profile in LOAD_PROFILES.items()}
    loads[SLACK_NODE] -= sum(loads.values())
    return loads



def b_instance(variant: int) -> GasNetwork:
    """
    From-scratch Belgian design: no installed pipes, one exclusive diameter group per corridor row,
    parallel rows linked by diameter column, and candidate compressors on three corridors.
    """
    if variant not in (1, 2, 3, 4):
        raise UnknownInstance(f"Unknown B variant {variant}")

    nodes = _base_nodes(NODE_9_P_HI['A'])
    loads = scratch_loads(variant)
    nodes = [n._replace(q=loads[n.id]) for n in nodes]

    geometry = {pid: (src, dst, length) for pid, src, dst, length, _ in BASE_PIPES}
    arcs, groups = [], {}
    for row, diameters in DIAMETER_CHOICES:
        src, dst, length = geometry[row]
        groups[row] = AT_MOST_ONE if None in diameters else EXACTLY_ONE
        # Parallel rows end in A/B and share the diameter column
        corridor = row[:-1] if row[-1] in 'AB' else None

        for col, diameter in enumerate(diameters, 1):
            if diameter is None:
                continue
            arcs.append(Arc(id=f"{row}:D{col}", src=src, dst=dst, kind=PIPE,
                            w=pipe_resistance(diameter, length), candidate=True,
                            cost=expansion_cost(diameter, length), group=row,
                            parallel_column=f"{corridor}:D{col}" if corridor else None,
                            diameter=diameter, length=length))

    for src, dst in SCRATCH_COMPRESSORS:
        for k, ratio in enumerate(SCRATCH_RATIOS):
            arcs.append(_compressor(f"c{src}-{dst}:{k + 1}", src, dst, alpha_hi=ratio, candidate=True,
                                    cost=COMPRESSOR_COST + 100.0 * k))

    return GasNetwork(nodes, arcs, groups)


def scratch_instance(name: str) -> Tuple[GasNetwork, Dict]:
    variant = name.split('-', 1)[-1]
    if variant not in ('B1', 'B2', 'B3', 'B4'):
        raise UnknownInstance(f"Unknown Belgian instance {name}")

    network = b_instance(int(variant[1]))
    metadata = {'name': f"belgian-{variant}", 'source': SOURCE_SCRATCH,
                'notes': f"Load profile {variant}, rebalanced at node {SLACK_NODE}"}
    return network, metadata
