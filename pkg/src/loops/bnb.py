"""
Best-first branch and bound over the LP outer approximation of a MathProgram.

Cones enter through tangent cuts kept in one global pool; programs without cones (the PLA model)
go through the same tree with no separation.
"""
import time
import heapq
import numpy as np
import scipy.sparse as sp
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional, List, Tuple, Union

from models.program import MathProgram, LinRow
from lp.simplex import LpProblem, Basis, solve_lp, resolve_with_added_rows, OPTIMAL, INFEASIBLE
from utils.utils import DEFAULT_SOLVER_CONFIG, DEFAULT_LP_CONFIG, relative_gap, fmt_num
from utils.utils_run import FancyDict, Timer

from .separation import CutPool, root_cuts, separate_cone_cuts, cone_violation


S_OPTIMAL = 'Optimal'
S_INFEASIBLE = 'Infeasible'
S_UPPER = 'UpperBoundOnly'
S_LOWER = 'LowerBoundOnly'
S_UNKNOWN = 'Unknown'

ROW_TOL = 1e-6


class BnbNode(NamedTuple):
    bound: float
    seq: int
    depth: int
    fixings: Tuple[Tuple[int, float], ...]
    basis: Optional[Basis]


class PoolEntry(NamedTuple):
    objective: float
    x: np.ndarray


class SolveReport(NamedTuple):
    status: str
    incumbent: Optional[np.ndarray]
    objective: Optional[float]
    bound: Optional[float]
    gap: Optional[float]
    nodes: int
    wall_time: float
    pool: List[PoolEntry]
    cuts: int
    lp_iterations: int


class NodeResult(NamedTuple):
    outcome: str        # infeasible | pruned | integral | open | branch
    bound: float
    x: Optional[np.ndarray]
    basis: Optional[Basis]
    cuts: List[LinRow]
    lp_iterations: int
    branch_var: Optional[int] = None



def check_candidate(point: np.ndarray, program: MathProgram, cone_tol: float, int_tol: float = 1e-6) -> bool:
    """
    True iff `point` is integral on the binaries, satisfies every linear row and every cone
    """
    for v in program.binaries:
        if abs(point[v.index] - round(point[v.index])) > int_tol:
            return False
    for r in program.lin:
        if r.violation(point) > ROW_TOL * max(1.0, abs(r.rhs)):
            return False
    return all(cone_violation(c, point) <= cone_tol for c in program.cones)



class BranchAndBound(object):

    def __init__(self, program: MathProgram, config: Optional[Union[dict, FancyDict]] = None):
        config = {**DEFAULT_SOLVER_CONFIG, **DEFAULT_LP_CONFIG, **(config or {})}

        self.program = program
        self.gap_tol = config['GAP_TOL']
        self.cone_tol = config['CONE_TOL']
        self.int_tol = config['INT_TOL']
        self.z_floor = config['Z_FLOOR']
        self.cut_rounds = config['CUT_ROUNDS']
        self.threads = max(1, int(config['THREADS']))
        self.time_limit = config['TIME_LIMIT']
        self.node_limit = config['NODE_LIMIT']
        self.pool_size = config['POOL_SIZE']
        self.verbose = config['VERBOSE']
        self.log_every = config['LOG_EVERY']
        self.lp_config = {k: config[k] for k in DEFAULT_LP_CONFIG}

        self.phi_max = program.network.phi_max
        self.c = program.cost_vector()
        self.A, self.senses, self.rhs = program.row_matrix()
        self.lo, self.hi = program.bounds()

        order = program.branching_order()
        self.binaries = np.array(order, dtype=int)
        self.rank = {idx: k for k, idx in enumerate(order)}

        self.pool = CutPool(program.n)
        self.pool.add(root_cuts(program.cones, self.phi_max))

        self.incumbent, self.incumbent_obj = None, np.inf
        self.solutions: List[PoolEntry] = []
        self.open_bounds: List[float] = []
        self.heap: List[BnbNode] = []
        self.seq = 0
        self.nodes = 0
        self.lp_iterations = 0
        self.deadline = None


    def cutoff(self) -> float:
        return self.incumbent_obj - self.gap_tol

    def next_seq(self) -> int:
        self.seq += 1
        return self.seq

    def node_problem(self, node: BnbNode, snapshot) -> LpProblem:
        lo, hi = self.lo.copy(), self.hi.copy()
        for j, val in node.fixings:
            lo[j] = hi[j] = val
        A_pool, senses_pool, rhs_pool = snapshot
        return LpProblem(self.c, sp.vstack([self.A, A_pool], format='csr'),
                         tuple(self.senses) + tuple(senses_pool), np.concatenate([self.rhs, rhs_pool]), lo, hi)

    def fractionality(self, x: np.ndarray) -> np.ndarray:
        if len(self.binaries) == 0:
            return np.zeros(0)
        vals = x[self.binaries]
        return np.abs(vals - np.round(vals))

    def branching_var(self, x: np.ndarray) -> Optional[int]:
        """ Most fractional binary; ties go to the earlier one in y, z, v order """
        frac = self.fractionality(x)
        if len(frac) == 0 or frac.max() <= self.int_tol:
            return None
        # binaries are already in branching order, argmax keeps the first of equals
        return int(self.binaries[np.argmax(np.round(frac, 12))])

    def past_deadline(self) -> bool:
        return self.deadline is not None and time.perf_counter() > self.deadline


    def process(self, node: BnbNode, snapshot, cutoff: float, leaf_rounds: Optional[int] = None) -> NodeResult:
        """
        Solve a node LP and separate cone cuts. Fractional nodes stop after CUT_ROUNDS rounds; integral
        ones keep separating until every cone holds, no new cut comes out, or the deadline passes,
        unless `leaf_rounds` caps them too. Reads shared state only; the cuts found here are returned
        for the caller to merge.
        """
        problem = self.node_problem(node, snapshot)
        sol = solve_lp(problem, node.basis, self.lp_config)
        iters, found, keys = sol.iterations, [], set()

        rounds = 0
        while True:
            if sol.status == INFEASIBLE:
                return NodeResult('infeasible', np.inf, None, None, found, iters)
            if sol.status != OPTIMAL:
                return NodeResult('open', node.bound, None, None, found, iters)
            if sol.obj >= cutoff:
                return NodeResult('pruned', sol.obj, None, None, found, iters)

            branch_var = self.branching_var(sol.x)
            limit = leaf_rounds if branch_var is None else self.cut_rounds
            if (limit is not None and rounds >= limit) or self.past_deadline():
                break

            cuts = []
            for r in separate_cone_cuts(sol.x, self.program.cones, self.cone_tol, self.phi_max, self.z_floor):
                k = CutPool.key(r)
                if k not in keys:
                    keys.add(k)
                    cuts.append(r)
            if not cuts:
                break

            found.extend(cuts)
            problem, sol = resolve_with_added_rows(problem, sol, self.pool.matrix(cuts), self.lp_config)
            iters += sol.iterations
            rounds += 1

        if branch_var is not None:
            return NodeResult('branch', sol.obj, sol.x, sol.basis, found, iters, branch_var)
        if check_candidate(sol.x, self.program, self.cone_tol, self.int_tol):
            return NodeResult('integral', sol.obj, sol.x, sol.basis, found, iters)
        # stopped by the deadline or a round cap: still a valid bound for the subtree
        return NodeResult('open', sol.obj, sol.x, sol.basis, found, iters)


    def offer(self, x: np.ndarray, obj: float):
        if obj < self.incumbent_obj:
            self.incumbent, self.incumbent_obj = x, obj

        pattern = tuple(np.round(x[self.binaries]).astype(int))
        if any(tuple(np.round(e.x[self.binaries]).astype(int)) == pattern for e in self.solutions):
            return
        self.solutions.append(PoolEntry(obj, x))
        self.solutions.sort(key=lambda e: e.objective)
        del self.solutions[self.pool_size:]


    def merge(self, node: BnbNode, res: NodeResult, snapshot_size: int):
        """ Fold one node result into the tree, in batch order """
        self.lp_iterations += res.lp_iterations
        before = len(self.pool)
        added = self.pool.add(res.cuts)
        # the basis indexes rows of snapshot + local cuts; it only carries over when those land in the same place
        basis = res.basis if (before == snapshot_size and added == len(res.cuts)) else None

        if res.outcome == 'integral':
            self.offer(res.x, res.bound)
        elif res.outcome == 'open':
            self.open_bounds.append(res.bound)
        elif res.outcome == 'branch':
            j = res.branch_var
            for val in (0.0, 1.0):
                child = BnbNode(res.bound, self.next_seq(), node.depth + 1, node.fixings + ((j, val),), basis)
                heapq.heappush(self.heap, child)


    def log(self):
        bound = min([n.bound for n in self.heap] + self.open_bounds, default=self.incumbent_obj)
        print(f"[bnb] nodes: {self.nodes} open: {len(self.heap)} incumbent: {fmt_num(self.incumbent_obj)} "
              f"bound: {fmt_num(bound)} cuts: {len(self.pool)}", flush=True)


    def run(self) -> SolveReport:
        with Timer() as timer:
            self.deadline = time.perf_counter() + self.time_limit if self.time_limit is not None else None
            heapq.heappush(self.heap, BnbNode(-np.inf, 0, 0, (), None))
            limit_hit = False
            executor = ThreadPoolExecutor(max_workers=self.threads) if self.threads > 1 else None

            try:
                while self.heap:
                    if self.past_deadline() or (self.node_limit is not None and self.nodes >= self.node_limit):
                        limit_hit = True
                        break

                    cutoff = self.cutoff()
                    batch = []
                    while self.heap and len(batch) < self.threads:
                        node = heapq.heappop(self.heap)
                        if node.bound < cutoff:
                            batch.append(node)
                    if not batch:
                        break

                    snapshot, size = self.pool.matrix(), len(self.pool)
                    if executor is None:
                        results = [self.process(batch[0], snapshot, cutoff)]
                    else:
                        results = list(executor.map(lambda nd: self.process(nd, snapshot, cutoff), batch))

                    for node, res in zip(batch, results):
                        self.merge(node, res, size)

                    self.nodes += len(batch)
                    if self.verbose and self.nodes % self.log_every < len(batch):
                        self.log()
            finally:
                if executor is not None:
                    executor.shutdown()

        return self.report(limit_hit, timer.interval)


    def report(self, limit_hit: bool, wall_time: float) -> SolveReport:
        cutoff = self.cutoff()
        remaining = [n.bound for n in self.heap if n.bound < cutoff] if limit_hit else []
        pending = remaining + self.open_bounds

        if self.incumbent is not None:
            bound = min(pending + [self.incumbent_obj])
            status = S_OPTIMAL if bound >= cutoff else S_UPPER
            if status == S_OPTIMAL:
                bound = max(bound, self.incumbent_obj - self.gap_tol)
        elif not pending:
            status, bound = S_INFEASIBLE, None
        else:
            bound = min(pending)
            status = S_LOWER if np.isfinite(bound) else S_UNKNOWN
            bound = bound if np.isfinite(bound) else None

        objective = None if self.incumbent is None else float(self.incumbent_obj)
        if self.verbose:
            self.log()
        return SolveReport(status, self.incumbent, objective, bound, relative_gap(objective, bound), self.nodes,
                           wall_time, list(self.solutions), len(self.pool), self.lp_iterations)



def solve_misocp(program: MathProgram, config: Optional[Union[dict, FancyDict]] = None) -> SolveReport:
    """
    Branch and bound with outer approximation

    Parameters:
    -----------
        program: MathProgram
            MISOCP or PLA-MIP program
        config: dict
            Overrides of DEFAULT_SOLVER_CONFIG and DEFAULT_LP_CONFIG

    Returns:
    -------
    SolveReport
        Status is Optimal, Infeasible, UpperBoundOnly (incumbent, limit hit),
        LowerBoundOnly (no incumbent, limit hit) or Unknown
    """
    return BranchAndBound(program, config).run()


def solve_relaxation(program: MathProgram, config: Optional[Union[dict, FancyDict]] = None) -> SolveReport:
    """ Root LP plus the cut loop, no branching """
    bnb = BranchAndBound(program, config)
    with Timer() as timer:
        bnb.deadline = time.perf_counter() + bnb.time_limit if bnb.time_limit is not None else None
        root = BnbNode(-np.inf, 0, 0, (), None)
        res = bnb.process(root, bnb.pool.matrix(), np.inf, leaf_rounds=bnb.cut_rounds)
        bnb.lp_iterations += res.lp_iterations
        bnb.pool.add(res.cuts)

    if res.outcome == 'infeasible':
        status, bound = S_INFEASIBLE, None
    else:
        status = S_LOWER if np.isfinite(res.bound) else S_UNKNOWN
        bound = float(res.bound) if np.isfinite(res.bound) else None
    return SolveReport(status, None, None, bound, None, 1, timer.interval, [], len(bnb.pool), bnb.lp_iterations)
