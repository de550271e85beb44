"""
Piecewise-linear MIP: the incremental formulation of phi|phi| on uniform breakpoints over [-Phi, Phi],
with each Weymouth equality widened into a band that under-estimates the pressure drop.

The interpolant f of phi|phi| never falls below the curve in magnitude, and the gap is at most
pla_error = (2 Phi / K)^2 / 4. A pipe carrying flow forward may therefore drop between w (f - E) and
w f, and a backward one between w f and w (f + E). The exact curve lies inside the band, so any
MINLP-feasible design is feasible here too.
"""
import numpy as np
from typing import Optional, Union, Tuple

from network.gas_network import GasNetwork, Arc
from utils.utils_run import FancyDict, BadParameters

from .program import MathProgram, PLAMIP, LE, EQ, GE
from .misocp import SkeletonBuilder


def pla_breakpoints(phi_max: float, segments: int) -> Tuple[np.ndarray, np.ndarray]:
    """ Breakpoints x_0..x_K and the values x|x| at them """
    x = np.linspace(-phi_max, phi_max, segments + 1)
    return x, x * np.abs(x)


def pla_value(phi: float, phi_max: float, segments: int) -> float:
    """ The piecewise-linear interpolant of phi|phi| the program encodes """
    x, g = pla_breakpoints(phi_max, segments)
    return float(np.interp(phi, x, g))


def pla_error(phi_max: float, segments: int) -> float:
    """ Largest secant error of x^2 over one segment """
    return (2.0 * phi_max / segments) ** 2 / 4.0



class PlaBuilder(SkeletonBuilder):
    kind = PLAMIP

    def __init__(self, network: GasNetwork, segments: int, config: Optional[Union[dict, FancyDict]] = None):
        if not isinstance(segments, (int, np.integer)) or segments < 2:
            raise BadParameters(f"segments={segments}, need an integer >= 2")
        super().__init__(network, config)
        self.segments = int(segments)
        self.x, self.g = pla_breakpoints(self.phi_max, self.segments)
        self.error = pla_error(self.phi_max, self.segments)

    def declare_extra_continuous(self):
        p, phi_max = self.program, self.phi_max
        for a in self.network.arcs:
            if a.lossy:
                p.add_var('pla_f', a.id, -phi_max ** 2, phi_max ** 2)
                for k in range(1, self.segments + 1):
                    p.add_var('pla_delta', (a.id, k), 0.0, 1.0)

    def declare_extra_binaries(self):
        for a in self.network.arcs:
            if a.lossy:
                for k in range(1, self.segments):
                    self.program.add_var('pla_bin', (a.id, k), 0, 1, binary=True)

    def weymouth_rows(self, a: Arc):
        p, K = self.program, self.segments
        phi, f = p.var('phi', a.id), p.var('pla_f', a.id)
        delta = [p.var('pla_delta', (a.id, k)) for k in range(1, K + 1)]
        step = self.x[1] - self.x[0]

        # phi = x_0 + h sum delta_k,  f = g_0 + sum (g_k - g_{k-1}) delta_k
        p.add_row({phi: 1, **{d: -step for d in delta}}, EQ, self.x[0], 'pla')
        p.add_row({f: 1, **{d: -(self.g[k + 1] - self.g[k]) for k, d in enumerate(delta)}}, EQ, self.g[0], 'pla')

        # delta_{k+1} <= b_k <= delta_k fills segments in order
        for k in range(1, K):
            b = p.var('pla_bin', (a.id, k))
            p.add_row({delta[k]: 1, b: -1}, LE, 0, 'pla')
            p.add_row({b: 1, delta[k - 1]: -1}, LE, 0, 'pla')

        bi, bj = p.var('beta', a.src), p.var('beta', a.dst)
        yp, ym = p.var('yplus', a.id), p.var('yminus', a.id)
        slack = a.w * self.error
        # w (f - E y+) <= beta_i - beta_j <= w (f + E y-)
        lower = {bi: 1, bj: -1, f: -a.w, yp: slack}
        upper = {bi: 1, bj: -1, f: -a.w, ym: -slack}
        if not a.candidate:
            p.add_row(lower, GE, 0, 'weymouth')
            p.add_row(upper, LE, 0, 'weymouth')
            return

        ni, nj = self.network.node(a.src), self.network.node(a.dst)
        big_m = max(ni.beta_hi - nj.beta_lo, nj.beta_hi - ni.beta_lo, 0.0) + a.w * self.phi_max ** 2 + slack
        z = p.var('zp', a.id)
        p.add_row({**upper, z: big_m}, LE, big_m, 'weymouth')
        p.add_row({**lower, z: -big_m}, GE, -big_m, 'weymouth')



def build_pla_mip(network: GasNetwork, segments: int = 60,
                  config: Optional[Union[dict, FancyDict]] = None) -> MathProgram:
    """
    Piecewise-linear approximation model

    Parameters:
    -----------
        network: GasNetwork
            Validated network
        segments: int
            Number of uniform segments on [-Phi, Phi], at least 2
        config: dict
            Solver config, only 'CUTS' is read

    Returns:
    -------
    MathProgram
        Program of kind PLAMIP
    """
    return PlaBuilder(network, segments, config).build()
