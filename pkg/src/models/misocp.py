"""
Skeleton shared by the three GTNEP programs and the MISOCP relaxation built on it.
"""
from typing import Optional, Union

from network.gas_network import GasNetwork, Arc, SHORT_PIPE, COMPRESSOR, VALVE, CONTROL_VALVE, \
    AT_MOST_ONE
from utils.utils import DEFAULT_SOLVER_CONFIG
from utils.utils_run import FancyDict

from .program import MathProgram, ConeRow, MISOCP, LE, EQ, GE, PLAIN, PERSPECTIVE
from .cuts import add_integer_cuts



class SkeletonBuilder(object):
    """
    Variables and linear rows common to every model: conservation, direction binaries, the
    direction/flow and direction/pressure couplings, compressor and valve rows, candidate gating,
    group exclusivity and the expansion objective. Subclasses add the Weymouth part.
    """
    kind = None
    with_gamma = False

    def __init__(self, network: GasNetwork, config: Optional[Union[dict, FancyDict]] = None):
        config = {**DEFAULT_SOLVER_CONFIG, **(config or {})}

        self.network = network
        self.cuts = bool(config['CUTS'])
        self.phi_max = network.phi_max
        self.program = MathProgram(self.kind, network)


    def build(self) -> MathProgram:
        self.declare_vars()
        self.flow_rows()
        for a in self.network.arcs:
            self.direction_rows(a)
            if a.lossy:
                self.pressure_direction_rows(a)
                self.weymouth_rows(a)
            elif a.kind == SHORT_PIPE:
                self.short_pipe_rows(a)
            elif a.kind in (VALVE, CONTROL_VALVE):
                self.ratio_rows(a, gate=self.program.var('v', a.id))
            elif a.kind == COMPRESSOR:
                self.ratio_rows(a, gate=self.program.var('zc', a.id) if a.candidate else None)
            self.gating_rows(a)
        self.group_rows()
        self.objective()

        if self.cuts:
            add_integer_cuts(self.program, self.network)

        return self.program


    def declare_vars(self):
        p, phi_max = self.program, self.phi_max

        for n in self.network.nodes:
            p.add_var('beta', n.id, n.beta_lo, n.beta_hi)
        for a in self.network.arcs:
            p.add_var('phi', a.id, -phi_max, phi_max)
        if self.with_gamma:
            for a in self.network.arcs:
                if a.lossy:
                    p.add_var('gamma', a.id, 0.0, self.gamma_upper(a))
        self.declare_extra_continuous()

        for a in self.network.arcs:
            p.add_var('yplus', a.id, 0, 1, binary=True)
        for a in self.network.arcs:
            # Unidirectional compressors never carry reverse flow
            hi = 0 if (a.kind == COMPRESSOR and not a.bidirectional) else 1
            p.add_var('yminus', a.id, 0, hi, binary=True)
        for a in self.network.arcs:
            if a.candidate and a.lossy:
                p.add_var('zp', a.id, 0, 1, binary=True)
        for a in self.network.arcs:
            if a.candidate and not a.lossy:
                p.add_var('zc', a.id, 0, 1, binary=True)
        for a in self.network.arcs:
            if a.kind in (VALVE, CONTROL_VALVE):
                p.add_var('v', a.id, 0, 1, binary=True)
        self.declare_extra_binaries()


    def declare_extra_continuous(self):
        pass

    def declare_extra_binaries(self):
        pass

    def weymouth_rows(self, a: Arc):
        pass


    def gamma_upper(self, a: Arc) -> float:
        ni, nj = self.network.node(a.src), self.network.node(a.dst)
        return max(ni.beta_hi - nj.beta_lo, nj.beta_hi - ni.beta_lo, 0.0)


    def flow_rows(self):
        """ Outflow minus inflow equals the injection """
        p = self.program
        for n in self.network.nodes:
            coefs = {}
            for a in self.network.arcs_out(n.id):
                coefs[p.var('phi', a.id)] = coefs.get(p.var('phi', a.id), 0.0) + 1.0
            for a in self.network.arcs_in(n.id):
                coefs[p.var('phi', a.id)] = coefs.get(p.var('phi', a.id), 0.0) - 1.0
            p.add_row(coefs, EQ, n.q, 'flow')


    def direction_rows(self, a: Arc):
        p, phi_max = self.program, self.phi_max
        phi, yp, ym = p.var('phi', a.id), p.var('yplus', a.id), p.var('yminus', a.id)

        p.add_row({yp: 1, ym: 1}, EQ, 1, 'dirsum')
        # -(1 - y+) Phi <= phi <= (1 - y-) Phi
        p.add_row({phi: 1, yp: -phi_max}, GE, -phi_max, 'dirflow')
        p.add_row({phi: 1, ym: phi_max}, LE, phi_max, 'dirflow')


    def pressure_direction_rows(self, a: Arc):
        """ -(1 - y+)(bu_j - bl_i) <= beta_i - beta_j <= (1 - y-)(bu_i - bl_j) """
        p = self.program
        ni, nj = self.network.node(a.src), self.network.node(a.dst)
        bi, bj = p.var('beta', a.src), p.var('beta', a.dst)
        yp, ym = p.var('yplus', a.id), p.var('yminus', a.id)

        m_fwd = max(nj.beta_hi - ni.beta_lo, 0.0)
        m_bwd = max(ni.beta_hi - nj.beta_lo, 0.0)
        p.add_row({bi: 1, bj: -1, yp: -m_fwd}, GE, -m_fwd, 'dirpress')
        p.add_row({bi: 1, bj: -1, ym: m_bwd}, LE, m_bwd, 'dirpress')


    def short_pipe_rows(self, a: Arc):
        p = self.program
        bi, bj = p.var('beta', a.src), p.var('beta', a.dst)
        if not a.candidate:
            p.add_row({bi: 1, bj: -1}, EQ, 0, 'shortpipe')
            return

        ni, nj = self.network.node(a.src), self.network.node(a.dst)
        z = p.var('zc', a.id)
        m_fwd = max(ni.beta_hi - nj.beta_lo, 0.0)
        m_bwd = max(nj.beta_hi - ni.beta_lo, 0.0)
        p.add_row({bi: 1, bj: -1, z: m_fwd}, LE, m_fwd, 'shortpipe')
        p.add_row({bi: 1, bj: -1, z: -m_bwd}, GE, -m_bwd, 'shortpipe')


    def ratio_rows(self, a: Arc, gate: Optional[int] = None):
        """
        alpha_lo beta_in <= beta_out <= alpha_hi beta_in in the flow direction, relaxed by big-M unless the
        direction binary (and the gate, if any) is 1. Constants clamp at 0 where the row is implied by bounds.
        """
        p = self.program
        ni, nj = self.network.node(a.src), self.network.node(a.dst)
        bi, bj = p.var('beta', a.src), p.var('beta', a.dst)
        lo, hi = a.alpha_lo, a.alpha_hi

        directions = [(p.var('yplus', a.id), bi, bj, ni, nj)]
        if not (a.kind == COMPRESSOR and not a.bidirectional):
            directions.append((p.var('yminus', a.id), bj, bi, nj, ni))

        for y, b_in, b_out, n_in, n_out in directions:
            m_lo = max(lo * n_in.beta_hi - n_out.beta_lo, 0.0)
            m_hi = max(n_out.beta_hi - hi * n_in.beta_lo, 0.0)

            lower = {b_out: 1, b_in: -lo, y: -m_lo}
            upper = {b_out: 1, b_in: -hi, y: m_hi}
            n_switch = 1
            if gate is not None:
                lower[gate] = -m_lo
                upper[gate] = m_hi
                n_switch = 2
            p.add_row(lower, GE, -n_switch * m_lo, 'ratio')
            p.add_row(upper, LE, n_switch * m_hi, 'ratio')


    def gating_rows(self, a: Arc):
        """ -z Phi <= phi <= z Phi for every switchable arc """
        p, phi_max = self.program, self.phi_max
        phi = p.var('phi', a.id)

        if a.kind in (VALVE, CONTROL_VALVE):
            gate = p.var('v', a.id)
            if a.candidate:
                p.add_row({gate: 1, p.var('zc', a.id): -1}, LE, 0, 'gating')
        elif a.candidate:
            gate = p.var('zp' if a.lossy else 'zc', a.id)
        else:
            return

        p.add_row({phi: 1, gate: phi_max}, GE, 0, 'gating')
        p.add_row({phi: 1, gate: -phi_max}, LE, 0, 'gating')


    def group_rows(self):
        p = self.program
        for g, members in self.network.group_members().items():
            if not members:
                continue
            sense = LE if self.network.groups[g] == AT_MOST_ONE else EQ
            p.add_row({p.var('zp', a.id): 1 for a in members}, sense, 1, 'group')

        for col, members in self.network.parallel_columns().items():
            first = p.var('zp', members[0].id)
            for a in members[1:]:
                p.add_row({first: 1, p.var('zp', a.id): -1}, EQ, 0, 'column')


    def objective(self):
        p = self.program
        for a in self.network.candidates():
            if a.cost != 0:
                p.objective[p.var('zp' if a.lossy else 'zc', a.id)] = a.cost



class MisocpBuilder(SkeletonBuilder):
    """
    gamma_a stands for (y+ - y-)(beta_i - beta_j); four McCormick rows make it exact for integral
    directions, and the rotated cones gamma >= w phi^2 (z gamma >= w phi^2 for candidates) relax Weymouth.
    """
    kind = MISOCP
    with_gamma = True

    def weymouth_rows(self, a: Arc):
        p = self.program
        ni, nj = self.network.node(a.src), self.network.node(a.dst)
        g, bi, bj = p.var('gamma', a.id), p.var('beta', a.src), p.var('beta', a.dst)
        yp, ym = p.var('yplus', a.id), p.var('yminus', a.id)

        k1 = ni.beta_lo - nj.beta_hi
        k2 = ni.beta_hi - nj.beta_lo
        p.add_row({g: 1, bj: -1, bi: 1, yp: -k1, ym: k1}, GE, k1, 'mc1')
        p.add_row({g: 1, bi: -1, bj: 1, yp: -k2, ym: k2}, GE, -k2, 'mc2')
        p.add_row({g: 1, bi: 1, bj: -1, yp: -k2, ym: k2}, LE, k2, 'mc3')
        p.add_row({g: 1, bi: -1, bj: 1, yp: -k1, ym: k1}, LE, -k1, 'mc4')

        if a.candidate:
            p.cones.append(ConeRow(PERSPECTIVE, g, p.var('phi', a.id), p.var('zp', a.id), a.w, 'cone'))
        else:
            p.cones.append(ConeRow(PLAIN, g, p.var('phi', a.id), None, a.w, 'cone'))



def build_misocp(network: GasNetwork, config: Optional[Union[dict, FancyDict]] = None) -> MathProgram:
    """
    MISOCP relaxation of the expansion problem

    Parameters:
    -----------
        network: GasNetwork
            Validated network
        config: dict
            Solver config, only 'CUTS' is read

    Returns:
    -------
    MathProgram
        Program of kind MISOCP
    """
    return MisocpBuilder(network, config).build()
