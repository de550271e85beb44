import numpy as np
from typing import NamedTuple, Dict, Optional

from models.program import MathProgram

FEAS_TOL = 1e-6


class CertifyReport(NamedTuple):
    families: Dict[str, float]
    max_violation: float
    feasible: bool



def design_cost(program: MathProgram, assignment: Dict) -> float:
    """ Expansion cost of a binary design; depends on the binaries only """
    cost = 0.0
    for i, c in program.objective.items():
        v = program.vars[i]
        cost += c * assignment.get((v.kind, v.subject), 0)
    return float(cost)


def point_vector(program: MathProgram, beta: Dict, phi: Dict, assignment: Dict) -> np.ndarray:
    x = np.zeros(program.n)
    for v in program.vars:
        if v.kind == 'beta':
            x[v.index] = beta[v.subject]
        elif v.kind == 'phi':
            x[v.index] = phi.get(v.subject, 0.0)
        elif v.binary:
            x[v.index] = assignment.get((v.kind, v.subject), 0)
    return x



def certify(program_minlp: MathProgram, beta: Dict, phi: Dict, assignment: Dict,
            tolerances: Optional[Dict] = None) -> CertifyReport:
    """
    Evaluate every row of the MINLP at a complete point

    Parameters:
    -----------
        program_minlp: MathProgram
            MINLP program of the network
        beta, phi: dict
            node id -> squared pressure, arc id -> flow (missing arcs carry 0)
        assignment: dict
            (kind, arc id) -> 0|1 for every binary
        tolerances: dict
            'FEAS_TOL' for linear rows (scaled by max(1, |rhs|)) and variable bounds,
            'RES_TOL' for the Weymouth rows

    Returns:
    -------
    CertifyReport
        Max absolute violation per row family ('bounds', each linear tag, 'weymouth')
    """
    tolerances = tolerances or {}
    feas_tol = tolerances.get('FEAS_TOL', FEAS_TOL)
    res_tol = tolerances.get('RES_TOL', FEAS_TOL)

    x = point_vector(program_minlp, beta, phi, assignment)
    lo, hi = program_minlp.bounds()
    families, feasible = {}, True

    if program_minlp.n:
        bound_viol = np.maximum(np.maximum(lo - x, x - hi), 0.0)
        families['bounds'] = float(bound_viol.max())
        feasible &= bool(np.all(bound_viol <= feas_tol * np.maximum(1.0, np.abs(np.where(x > hi, hi, lo)))))

    for r in program_minlp.lin:
        viol = r.violation(x)
        families[r.tag] = max(families.get(r.tag, 0.0), viol)
        feasible &= viol <= feas_tol * max(1.0, abs(r.rhs))

    for b in program_minlp.bilinear:
        viol = abs(b.residual(x))
        families['weymouth'] = max(families.get('weymouth', 0.0), viol)
        feasible &= viol <= res_tol

    return CertifyReport(families, max(families.values(), default=0.0), bool(feasible))
