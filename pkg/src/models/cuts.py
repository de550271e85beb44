"""
Valid inequalities on the direction binaries.
"""
from network.gas_network import GasNetwork, RATIO_KINDS

from .program import MathProgram, EQ, GE


def _orientation_equality(program: MathProgram, a, b, same: bool, tag: str):
    """ y+_a = y+_b when `same`, y+_a = y-_b otherwise """
    other = 'yplus' if same else 'yminus'
    program.add_row({program.var('yplus', a.id): 1, program.var(other, b.id): -1}, EQ, 0, tag)


def add_integer_cuts(program: MathProgram, network: GasNetwork) -> int:
    """
    Add injection, demand, degree-two and parallel-arc cuts to `program`.

    A source must push gas out through at least one arc and a sink must receive through one. A node
    with no injection and two non-switchable arcs (not both compressors or valves) passes the flow
    straight through. Parallel pipe-like arcs share a direction.

    :param program: program built from `network`, holding yplus/yminus for every arc
    :param network: the network
    :return: number of rows added
    """
    before = len(program.lin)

    for n in network.nodes:
        out_arcs, in_arcs = network.arcs_out(n.id), network.arcs_in(n.id)
        if n.q > 0:
            coefs = {program.var('yplus', a.id): 1 for a in out_arcs}
            coefs.update({program.var('yminus', a.id): 1 for a in in_arcs})
            if coefs:
                program.add_row(coefs, GE, 1, 'cut_injection')
        elif n.q < 0:
            coefs = {program.var('yplus', a.id): 1 for a in in_arcs}
            coefs.update({program.var('yminus', a.id): 1 for a in out_arcs})
            if coefs:
                program.add_row(coefs, GE, 1, 'cut_demand')
        elif len(out_arcs) + len(in_arcs) == 2:
            arcs = in_arcs + out_arcs
            if any(a.switchable for a in arcs) or all(a.kind in RATIO_KINDS for a in arcs):
                continue
            a, b = arcs
            # one arc in and one out keeps the orientation, two in or two out flips it
            same = (len(in_arcs) == 1)
            _orientation_equality(program, a, b, same, 'cut_degree2')

    for a, b in network.parallel_pairs():
        _orientation_equality(program, a, b, a.src == b.src, 'cut_parallel')

    return len(program.lin) - before
