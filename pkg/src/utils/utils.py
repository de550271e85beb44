import os
import numpy as np
from pathlib import Path
from typing import Optional, List, Union, Dict


KNOWN_INSTANCES = ['tiny-3', 'tiny-loop',
                   'belgian-A', 'belgian-A1', 'belgian-A2', 'belgian-A3',
                   'belgian-B1', 'belgian-B2', 'belgian-B3', 'belgian-B4']
KNOWN_MODELS = ['misocp', 'pla', 'relax-only']

FILE_DIR = os.path.dirname(os.path.realpath(__file__))
INSTANCE_DIR = Path(os.path.join(FILE_DIR, "..", "..", 'data/instances/'))
DATA_DIR_ENV = 'GTNEP_DATA_DIR'

# Exit codes are part of the command line contract
EXIT_OK = 0
EXIT_BAD_INSTANCE = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3

# Solve status -> (csv token, glyph)
STATUS_TOKENS = {
    'Optimal': ('OPT', '★'),
    'LowerBoundOnly': ('LB', '△'),
    'UpperBoundOnly': ('UB', '▽'),
    'Infeasible': ('INF', '†'),
    'Unknown': ('UNK', '‡'),
}

DEFAULT_SOLVER_CONFIG = {
    'GAP_TOL': 1e-6,
    'CONE_TOL': 1e-6,
    'TIME_LIMIT': 3600.0,
    'NODE_LIMIT': None,
    'CUTS': True,
    'THREADS': 1,
    'CUT_ROUNDS': 50,
    'POOL_SIZE': 5,
    'Z_FLOOR': 1e-6,
    'INT_TOL': 1e-6,
    'PLA_SEGMENTS': 60,
    'RES_TOL': 1e-6,
    'GN_MAX_ITERS': 200,
    'GN_DAMPING_FLOOR': 1e-10,
    'VERBOSE': False,
    'LOG_EVERY': 100,
}

DEFAULT_RUN_CONFIG = {
    'INSTANCE': None,
    'FILE': None,
    'MODEL': 'misocp',
    'STRESS': 1.0,
    'OUT': None,
    # Off for byte-identical reports
    'TIMINGS': True,
}

DEFAULT_LP_CONFIG = {
    'FEAS_TOL': 1e-7,
    'OPT_TOL': 1e-7,
    'PIVOT_TOL': 1e-9,
    'MAX_ITERS': 50000,
    'DEGENERATE_LIMIT': 1000,
    'REFACTOR_EVERY': 100,
}



def get_config(overrides: Optional[Dict] = None) -> Dict:
    """
    Merge the run, solver and LP defaults with user overrides

    Parameters:
    -----------
        overrides: dict
            Upper-case keys overriding any default

    Returns:
    -------
    dict
        Fresh config dict
    """
    config = {**DEFAULT_RUN_CONFIG, **DEFAULT_SOLVER_CONFIG, **DEFAULT_LP_CONFIG}
    if overrides:
        config.update(overrides)
    return config



def level_to_factor(level: float) -> float:
    """
    "X% stress" means loads at (100 + X)% of base
    """
    return 1.0 + level / 100.0



def status_token(status: str) -> str:
    return STATUS_TOKENS[status][0]


def status_glyph(status: str) -> str:
    return STATUS_TOKENS[status][1]


def status_from_token(token: str) -> str:
    for status, (tok, _) in STATUS_TOKENS.items():
        if tok == token:
            return status
    raise KeyError(f"Unknown status token {token}")



def relative_gap(objective: Optional[float], bound: Optional[float]) -> Optional[float]:
    """
    Gap in percent, (obj - bound) / max(1, |obj|). None unless both exist.
    """
    if objective is None or bound is None or not np.isfinite(bound):
        return None
    return 100.0 * max(objective - bound, 0.0) / max(1.0, abs(objective))



def fmt_num(x: Union[float, None], digits: int = 2) -> str:
    """ Table formatting; '-' for missing values """
    if x is None:
        return '-'
    if not np.isfinite(x):
        return 'inf' if x > 0 else '-inf'
    return f"{x:.{digits}f}"
