from typing import Optional, Union

from network.gas_network import GasNetwork, Arc
from utils.utils_run import FancyDict

from .program import MathProgram, BilinearRow, MINLP
from .misocp import SkeletonBuilder



class MinlpBuilder(SkeletonBuilder):
    """
    Flux-direction MINLP: the skeleton plus the exact Weymouth rows
    [z] (y+ - y-)(beta_i - beta_j) = w phi^2. Never solved directly, recovery and certification read it.
    """
    kind = MINLP

    def weymouth_rows(self, a: Arc):
        p = self.program
        z = p.var('zp', a.id) if a.candidate else None
        p.bilinear.append(BilinearRow(p.var('yplus', a.id), p.var('yminus', a.id), z,
                                      p.var('beta', a.src), p.var('beta', a.dst), p.var('phi', a.id), a.w, 'weymouth'))



def build_minlp(network: GasNetwork, config: Optional[Union[dict, FancyDict]] = None) -> MathProgram:
    """ Integer cuts are left out unless config['CUTS'] is given explicitly """
    config = dict(config or {})
    config.setdefault('CUTS', False)
    return MinlpBuilder(network, config).build()
