"""
Turn integral designs into MINLP-feasible operating points: fix every binary, then solve the
remaining network analysis system of conservation, Weymouth and compressor ratio equations.
"""
import numpy as np
import torch
from tqdm import tqdm
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional, Dict, List, Tuple, Union

from network.gas_network import GasNetwork, COMPRESSOR, CONTROL_VALVE, VALVE, SHORT_PIPE
from models.program import MathProgram
from utils.utils import DEFAULT_SOLVER_CONFIG
from utils.utils_run import FancyDict

from .evaluation import certify, CertifyReport, design_cost

FEASIBLE = 'Feasible'
FAILED = 'Failed'

MIN_GAIN = 1e-4
LAMBDA_INIT = 1e-3
LAMBDA_MAX = 1e16
STEP_TOL = 1e-15
LINEAR_TOL = 1e-8


class FixedSolution(NamedTuple):
    u: np.ndarray
    max_residual: float
    converged: bool
    iterations: int


class RecoveryResult(NamedTuple):
    status: str
    objective: Optional[float]
    assignment: Dict[Tuple[str, str], int]
    beta: Dict[str, float]
    phi: Dict[str, float]
    ratio: Dict[str, float]
    max_residual: float
    certificate: Optional[CertifyReport]
    iterations: int
    pool_index: int



def extract_assignment(program: MathProgram, x: np.ndarray) -> Tuple[Dict, Dict]:
    """
    Rounded binaries {(kind, arc id): 0|1} and the continuous beta/phi values of a point of `program`
    """
    assignment = {(v.kind, v.subject): int(round(x[v.index])) for v in program.binaries
                  if v.kind in ('yplus', 'yminus', 'zp', 'zc', 'v')}
    warm = {(v.kind, v.subject): float(x[v.index]) for v in program.vars if v.kind in ('beta', 'phi')}
    return assignment, warm


def is_active(arc, assignment: Dict) -> bool:
    if arc.kind in (VALVE, CONTROL_VALVE) and not assignment[('v', arc.id)]:
        return False
    if arc.candidate:
        return bool(assignment[('zp' if arc.lossy else 'zc', arc.id)])
    return True


def direction(arc, assignment: Dict) -> int:
    return 1 if assignment[('yplus', arc.id)] else -1



class FixedSubproblem(object):
    """
    Unknowns u = [beta (all nodes), phi (active arcs), rho (active compressors and control valves)].

    Residual rows, in order: conservation per node, beta_i - beta_j - s w phi^2 per active pipe,
    beta_out - rho beta_in per ratio arc, beta_i - beta_j per short pipe and open valve.
    """
    def __init__(self, network: GasNetwork, assignment: Dict):
        self.network = network
        self.assignment = assignment
        phi_max = network.phi_max

        self.nodes = [n.id for n in network.nodes]
        self.active = [a for a in network.arcs if is_active(a, assignment)]
        self.signs = np.array([direction(a, assignment) for a in self.active], dtype=float)
        self.ratio_arcs = [a for a in self.active if a.kind in (COMPRESSOR, CONTROL_VALVE)]

        nb, na, nr = len(self.nodes), len(self.active), len(self.ratio_arcs)
        self.nb, self.na, self.nr = nb, na, nr
        node_ix = network.node_index
        arc_pos = {a.id: k for k, a in enumerate(self.active)}

        self.lo = np.concatenate([[n.beta_lo for n in network.nodes],
                                  np.where(self.signs > 0, 0.0, -phi_max),
                                  [a.alpha_lo for a in self.ratio_arcs]])
        self.hi = np.concatenate([[n.beta_hi for n in network.nodes],
                                  np.where(self.signs > 0, phi_max, 0.0),
                                  [a.alpha_hi for a in self.ratio_arcs]])

        def long(xs):
            return torch.tensor(xs, dtype=torch.long)

        self.q = torch.tensor([n.q for n in network.nodes], dtype=torch.float64)
        self.src = long([node_ix[a.src] for a in self.active])
        self.dst = long([node_ix[a.dst] for a in self.active])

        pipes = [a for a in self.active if a.lossy]
        self.p_arc = long([arc_pos[a.id] for a in pipes])
        self.p_i, self.p_j = long([node_ix[a.src] for a in pipes]), long([node_ix[a.dst] for a in pipes])
        self.p_sw = torch.tensor([direction(a, assignment) * a.w for a in pipes], dtype=torch.float64)

        fwd = [direction(a, assignment) > 0 for a in self.ratio_arcs]
        self.r_in = long([node_ix[a.src if f else a.dst] for a, f in zip(self.ratio_arcs, fwd)])
        self.r_out = long([node_ix[a.dst if f else a.src] for a, f in zip(self.ratio_arcs, fwd)])

        equal = [a for a in self.active if a.kind in (SHORT_PIPE, VALVE)]
        self.e_i, self.e_j = long([node_ix[a.src] for a in equal]), long([node_ix[a.dst] for a in equal])

        self.families = [('flow', nb), ('weymouth', len(pipes)), ('ratio', nr), ('equal', len(equal))]
        self.max_w = max([a.w for a in pipes], default=0.0)


    def residual(self, u: torch.Tensor) -> torch.Tensor:
        beta, phi, rho = u[:self.nb], u[self.nb:self.nb + self.na], u[self.nb + self.na:]
        flow = torch.zeros(self.nb, dtype=torch.float64).index_add(0, self.src, phi).index_add(0, self.dst, -phi) - self.q
        weymouth = beta[self.p_i] - beta[self.p_j] - self.p_sw * phi[self.p_arc] ** 2
        ratio = beta[self.r_out] - rho * beta[self.r_in]
        equal = beta[self.e_i] - beta[self.e_j]
        return torch.cat([flow, weymouth, ratio, equal])

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        return torch.autograd.functional.jacobian(self.residual, torch.tensor(u, dtype=torch.float64)).numpy()

    def evaluate(self, u: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            return self.residual(torch.tensor(u, dtype=torch.float64)).numpy()

    def project(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.lo, self.hi)

    def initial_point(self, warm: Dict) -> np.ndarray:
        """ MISOCP node values, moved into the box; ratios from the warm pressures """
        beta = np.array([warm.get(('beta', n), 0.5 * (self.network.node(n).beta_lo + self.network.node(n).beta_hi))
                         for n in self.nodes])
        phi = np.array([warm.get(('phi', a.id), 0.0) for a in self.active])
        rho = []
        for a, i, o in zip(self.ratio_arcs, self.r_in.tolist(), self.r_out.tolist()):
            rho.append(beta[o] / beta[i] if beta[i] > 0 else a.alpha_lo)
        return self.project(np.concatenate([beta, phi, np.array(rho, dtype=float)]))

    def res_tol(self, rel_tol: float) -> float:
        return rel_tol * max(1.0, self.max_w * self.network.phi_max ** 2)

    def row_tol(self, rel_tol: float) -> np.ndarray:
        """ Weymouth rows to res_tol, the linear families well inside the certification tolerance """
        _, n_wey, n_ratio, n_equal = (k for _, k in self.families)
        return np.concatenate([LINEAR_TOL * np.maximum(1.0, np.abs(self.q.numpy())),
                               np.full(n_wey, self.res_tol(rel_tol)),
                               np.full(n_ratio + n_equal, LINEAR_TOL)])

    def split(self, u: np.ndarray) -> Tuple[Dict, Dict, Dict]:
        beta = {n: float(u[k]) for k, n in enumerate(self.nodes)}
        phi = {a.id: 0.0 for a in self.network.arcs}
        phi.update({a.id: float(u[self.nb + k]) for k, a in enumerate(self.active)})
        ratio = {a.id: float(u[self.nb + self.na + k]) for k, a in enumerate(self.ratio_arcs)}
        return beta, phi, ratio



def solve_fixed(sub: FixedSubproblem, x0: np.ndarray,
                config: Optional[Union[dict, FancyDict]] = None) -> FixedSolution:
    """
    Projected Levenberg-Marquardt on the row-scaled residual r_i / tol_i over the box, so the system
    is solved exactly when every scaled row is within 1.

    Each step solves [J_F; sqrt(lam) D_F] d_F = [-r; 0] on the free variables F, where a variable
    is held when it sits on a bound and the gradient pushes it outward. D is the running maximum of
    the Jacobian column norms. lam shrinks with the gain ratio after an accepted step and doubles
    (then quadruples, ...) after each rejected one.
    """
    config = {**DEFAULT_SOLVER_CONFIG, **(config or {})}
    tol = sub.row_tol(config['RES_TOL'])
    floor = config['GN_DAMPING_FLOOR']

    def scaled(u):
        return sub.evaluate(u) / tol

    u = sub.project(np.asarray(x0, dtype=float))
    r = scaled(u)
    f = float(r @ r)
    col_norm = np.zeros(len(u))
    lam, nu = LAMBDA_INIT, 2.0

    it = 0
    for it in range(1, config['GN_MAX_ITERS'] + 1):
        if np.all(np.abs(r) <= 1.0):
            return FixedSolution(u, float(np.abs(r * tol).max(initial=0.0)), True, it - 1)

        J = sub.jacobian(u) / tol[:, None]
        g = J.T @ r
        col_norm = np.maximum(col_norm, np.linalg.norm(J, axis=0))
        D = np.where(col_norm > 0, col_norm, 1.0)
        free = ~(((u <= sub.lo) & (g > 0)) | ((u >= sub.hi) & (g < 0)))
        if not free.any():
            break

        accepted = False
        while lam <= LAMBDA_MAX:
            d = np.zeros(len(u))
            lhs = np.vstack([J[:, free], np.diag(np.sqrt(lam) * D[free])])
            rhs = np.concatenate([-r, np.zeros(int(free.sum()))])
            d[free] = np.linalg.lstsq(lhs, rhs, rcond=None)[0]

            u_new = sub.project(u + d)
            step = u_new - u
            predicted = f - float(np.sum((r + J @ step) ** 2))
            r_new = scaled(u_new)
            f_new = float(r_new @ r_new)
            actual = f - f_new
            if actual > 0 and actual >= MIN_GAIN * predicted:
                gain = actual / predicted if predicted > 0 else 1.0
                lam, nu = max(floor, lam * max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3)), 2.0
                accepted = True
                break
            lam, nu = lam * nu, nu * 2.0
        if not accepted:
            break

        stalled = np.linalg.norm(step) <= STEP_TOL * (np.linalg.norm(u) + STEP_TOL)
        u, r, f = u_new, r_new, f_new
        if stalled:
            break

    return FixedSolution(u, float(np.abs(r * tol).max(initial=0.0)), bool(np.all(np.abs(r) <= 1.0)), it)



def settle_directions(network: GasNetwork, assignment: Dict, beta: Dict) -> Dict:
    """
    Inactive arcs carry no flow, so their direction binaries only have to agree with the pressures
    """
    settled = dict(assignment)
    for a in network.arcs:
        if not is_active(a, assignment):
            forward = beta[a.src] >= beta[a.dst]
            settled[('yplus', a.id)], settled[('yminus', a.id)] = int(forward), int(not forward)
    return settled


def recover_one(program_minlp: MathProgram, assignment: Dict, warm: Dict, index: int,
                config: Optional[Union[dict, FancyDict]] = None) -> RecoveryResult:
    config = {**DEFAULT_SOLVER_CONFIG, **(config or {})}
    network = program_minlp.network

    sub = FixedSubproblem(network, assignment)
    sol = solve_fixed(sub, sub.initial_point(warm), config)
    beta, phi, ratio = sub.split(sol.u)
    assignment = settle_directions(network, assignment, beta)

    cert = certify(program_minlp, beta, phi, assignment, {'RES_TOL': sub.res_tol(config['RES_TOL'])})
    status = FEASIBLE if (sol.converged and cert.feasible) else FAILED
    return RecoveryResult(status, design_cost(program_minlp, assignment), assignment, beta, phi, ratio,
                          sol.max_residual, cert, sol.iterations, index)


def recover(program_minlp: MathProgram, report, source: MathProgram, pool: Optional[List] = None,
            config: Optional[Union[dict, FancyDict]] = None) -> Optional[RecoveryResult]:
    """
    Try the pool members in order and return the first Feasible recovery, else the Failed
    attempt with the smallest residual. None when there is nothing to recover.

    :param program_minlp: MINLP program of the network
    :param report: SolveReport of `source`
    :param source: the program whose points the report holds (MISOCP or PLA)
    :param pool: PoolEntry list, defaults to report.pool (incumbent first)
    """
    config = {**DEFAULT_SOLVER_CONFIG, **(config or {})}
    pool = list(report.pool if pool is None else pool)
    if not pool and report.incumbent is not None:
        pool = [(report.objective, report.incumbent)]
    if not pool:
        return None

    jobs = [extract_assignment(source, entry[1]) for entry in pool]

    def attempt(k):
        return recover_one(program_minlp, jobs[k][0], jobs[k][1], k, config)

    if config['THREADS'] > 1:
        with ThreadPoolExecutor(max_workers=config['THREADS']) as executor:
            results = list(executor.map(attempt, range(len(jobs))))
    else:
        results = []
        for k in tqdm(range(len(jobs)), desc='recover', disable=not config['VERBOSE']):
            results.append(attempt(k))
            if results[-1].status == FEASIBLE:
                break

    for res in results:
        if res.status == FEASIBLE:
            return res
    return min(results, key=lambda res: res.max_residual)
