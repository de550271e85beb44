"""
Bounded revised simplex on  min c x  s.t.  A x (<=|=|>=) b,  lo <= x <= hi.

Each row gets a slack so that A x + s = b, with s >= 0 on <= rows, s <= 0 on >= rows and s = 0 on
equalities. Column j < n is structural, column n + i is the slack of row i.
"""
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from typing import NamedTuple, Optional, Tuple, Union, Sequence, List

from utils.utils import DEFAULT_LP_CONFIG
from utils.utils_run import FancyDict


OPTIMAL = 'Optimal'
INFEASIBLE = 'Infeasible'
UNBOUNDED = 'Unbounded'
ITERATION_LIMIT = 'IterationLimit'

AT_LOWER, AT_UPPER, AT_ZERO, BASIC = 0, 1, 2, 3

TIE_TOL = 1e-12
SINGULAR_TOL = 1e-11


class LpProblem(NamedTuple):
    c: np.ndarray
    A: sp.csr_matrix
    senses: Tuple[str, ...]
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


class Basis(NamedTuple):
    basic: Tuple[int, ...]
    at_upper: frozenset


class LpSolution(NamedTuple):
    status: str
    x: Optional[np.ndarray]
    obj: Optional[float]
    duals: Optional[np.ndarray]
    reduced_costs: Optional[np.ndarray]
    basis: Optional[Basis]
    iterations: int
    farkas: Optional[np.ndarray] = None



def make_problem(c, A, senses: Sequence[str], rhs, lo, hi) -> LpProblem:
    A = sp.csr_matrix(A, dtype=float)
    m, n = A.shape
    c, rhs = np.asarray(c, dtype=float).reshape(n), np.asarray(rhs, dtype=float).reshape(m)
    lo, hi = np.asarray(lo, dtype=float).reshape(n), np.asarray(hi, dtype=float).reshape(n)
    senses = tuple(senses)
    assert len(senses) == m, f"{len(senses)} senses for {m} rows"
    assert all(s in ('<=', '=', '>=') for s in senses), f"Unknown sense in {set(senses)}"
    assert np.all(lo <= hi), "Some lower bound exceeds its upper bound"
    return LpProblem(c, A, senses, rhs, lo, hi)


def with_bounds(problem: LpProblem, lo: np.ndarray, hi: np.ndarray) -> LpProblem:
    return problem._replace(lo=np.asarray(lo, dtype=float), hi=np.asarray(hi, dtype=float))


def slack_bounds(senses: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    lo = np.array([0.0 if s in ('<=', '=') else -np.inf for s in senses])
    hi = np.array([0.0 if s in ('>=', '=') else np.inf for s in senses])
    return lo, hi


class BasisFactor(object):
    """
    Sparse LU of the basis matrix plus a product-form eta file: after pivots E_1..E_k the inverse is
    E_k ... E_1 B_0^-1, and each E is kept as its pivot position and entering column.
    """
    def __init__(self, m: int):
        self.m = m
        self.lu = None
        self.etas: List[Tuple[int, np.ndarray]] = []

    def load(self, B: sp.csc_matrix) -> bool:
        """ Factor B afresh; on a singular B the previous factor stays as it was """
        try:
            lu = splu(B)
        except RuntimeError:
            return False
        diag = np.abs(lu.U.diagonal())
        if not np.all(np.isfinite(diag)) or diag.min() <= SINGULAR_TOL * max(1.0, diag.max()):
            return False
        self.lu, self.etas = lu, []
        return True

    def ftran(self, v: np.ndarray) -> np.ndarray:
        """ B^-1 v """
        x = self.lu.solve(np.asarray(v, dtype=float))
        for r, alpha in self.etas:
            xr = x[r] / alpha[r]
            x -= xr * alpha
            x[r] = xr
        return x

    def btran(self, v: np.ndarray) -> np.ndarray:
        """ B^-T v """
        w = np.array(v, dtype=float)
        for r, alpha in reversed(self.etas):
            w[r] += (w[r] - alpha @ w) / alpha[r]
        return self.lu.solve(w, trans='T')

    def update(self, r: int, alpha: np.ndarray):
        self.etas.append((r, alpha.copy()))



class _Simplex(object):
    """
    Working state of one solve: a factored basis over a sparse column matrix.
    """
    def __init__(self, A: sp.csc_matrix, b: np.ndarray, cost: np.ndarray, lo: np.ndarray, hi: np.ndarray, config):
        self.A = A
        self.AT = A.T.tocsr()
        self.b, self.cost, self.lo, self.hi = b, cost, lo.copy(), hi.copy()
        self.m, self.N = A.shape

        self.feas_tol = config['FEAS_TOL']
        self.opt_tol = config['OPT_TOL']
        self.pivot_tol = config['PIVOT_TOL']
        self.max_iters = config['MAX_ITERS']
        self.degenerate_limit = config['DEGENERATE_LIMIT']
        self.refactor_every = config['REFACTOR_EVERY']

        self.state = np.full(self.N, AT_LOWER, dtype=int)
        self.basic = np.arange(self.m)
        self.excluded = np.zeros(self.N, dtype=bool)
        self.x = np.zeros(self.N)
        self.factor = BasisFactor(self.m)

        self.iterations = 0
        self.since_refactor = 0
        self.degenerate = 0


    def rest_state(self, j: int, prefer_upper: bool = False) -> int:
        if prefer_upper and np.isfinite(self.hi[j]):
            return AT_UPPER
        if np.isfinite(self.lo[j]):
            return AT_LOWER
        if np.isfinite(self.hi[j]):
            return AT_UPPER
        return AT_ZERO

    def set_basis(self, basic, at_upper=frozenset()):
        self.basic = np.array(basic, dtype=int)
        for j in range(self.N):
            self.state[j] = self.rest_state(j, prefer_upper=j in at_upper)
        self.state[self.basic] = BASIC

    def refactor(self) -> bool:
        if not self.factor.load(self.A[:, self.basic].tocsc()):
            return False
        self.since_refactor = 0
        return True


    def nonbasic_values(self) -> np.ndarray:
        x = np.zeros(self.N)
        x[self.state == AT_LOWER] = self.lo[self.state == AT_LOWER]
        x[self.state == AT_UPPER] = self.hi[self.state == AT_UPPER]
        return x

    def update_primal(self):
        x = self.nonbasic_values()
        x[self.basic] = self.factor.ftran(self.b - self.A @ x)
        self.x = x

    def duals(self) -> np.ndarray:
        return self.factor.btran(self.cost[self.basic])

    def reduced_costs(self, y: Optional[np.ndarray] = None) -> np.ndarray:
        y = self.duals() if y is None else y
        d = self.cost - self.AT @ y
        d[self.basic] = 0.0
        return d

    def column(self, j: int) -> np.ndarray:
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        v = np.zeros(self.m)
        v[self.A.indices[lo:hi]] = self.A.data[lo:hi]
        return self.factor.ftran(v)

    def row(self, r: int) -> np.ndarray:
        return self.AT @ self.unit_row(r)

    def unit_row(self, r: int) -> np.ndarray:
        """ Row r of the basis inverse """
        e = np.zeros(self.m)
        e[r] = 1.0
        return self.factor.btran(e)


    def pivot(self, r: int, q: int, alpha_q: np.ndarray, leaving_state: int):
        """ Basic position r hands over to column q; one more eta, or a fresh factor every REFACTOR_EVERY """
        p = self.basic[r]
        self.factor.update(r, alpha_q)

        self.basic[r] = q
        self.state[q] = BASIC
        self.state[p] = leaving_state
        self.iterations += 1
        self.since_refactor += 1
        if self.since_refactor >= self.refactor_every:
            self.refactor()

    def leaving_state_for(self, p: int, to_upper: bool) -> int:
        if self.lo[p] == self.hi[p]:
            return AT_LOWER
        return AT_UPPER if to_upper else AT_LOWER

    def objective(self) -> float:
        return float(self.cost @ self.x)


    def entering_candidates(self, d: np.ndarray) -> np.ndarray:
        """ Nonbasic columns whose reduced cost improves the objective """
        movable = (self.state != BASIC) & ~self.excluded & (self.lo < self.hi)
        improving = ((self.state == AT_LOWER) & (d < -self.opt_tol)) | \
                    ((self.state == AT_UPPER) & (d > self.opt_tol)) | \
                    ((self.state == AT_ZERO) & (np.abs(d) > self.opt_tol))
        return np.flatnonzero(movable & improving)


    def primal(self) -> str:
        """ Primal simplex from a primal feasible basis """
        self.update_primal()
        while True:
            if self.iterations >= self.max_iters:
                return ITERATION_LIMIT

            d = self.reduced_costs()
            cands = self.entering_candidates(d)
            if len(cands) == 0:
                return OPTIMAL

            bland = self.degenerate >= self.degenerate_limit
            q = int(cands[0]) if bland else int(cands[np.argmax(np.abs(d[cands]))])
            s = 1.0 if d[q] < 0 else -1.0

            alpha = self.column(q)
            delta = s * alpha
            xb, lob, hib = self.x[self.basic], self.lo[self.basic], self.hi[self.basic]

            ratios = np.full(self.m, np.inf)
            dec = (delta > self.pivot_tol) & np.isfinite(lob)
            inc = (delta < -self.pivot_tol) & np.isfinite(hib)
            ratios[dec] = (xb[dec] - lob[dec]) / delta[dec]
            ratios[inc] = (hib[inc] - xb[inc]) / -delta[inc]
            ratios = np.maximum(ratios, 0.0)

            t_flip = self.hi[q] - self.lo[q]
            t_min = ratios.min() if self.m else np.inf

            if not np.isfinite(t_min) and not np.isfinite(t_flip):
                return UNBOUNDED

            self.degenerate = self.degenerate + 1 if min(t_min, t_flip) <= TIE_TOL else 0

            if t_flip <= t_min:
                self.state[q] = AT_UPPER if self.state[q] == AT_LOWER else AT_LOWER
                self.iterations += 1
                self.update_primal()
                continue

            ties = np.flatnonzero(ratios <= t_min + TIE_TOL)
            if bland:
                r = int(ties[np.argmin(self.basic[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])

            p = self.basic[r]
            self.pivot(r, q, alpha, self.leaving_state_for(p, to_upper=delta[r] < 0))
            self.update_primal()


    def dual(self) -> Tuple[str, Optional[np.ndarray]]:
        """ Dual simplex from a dual feasible basis; returns (status, farkas row) """
        self.update_primal()
        while True:
            if self.iterations >= self.max_iters:
                return ITERATION_LIMIT, None

            xb, lob, hib = self.x[self.basic], self.lo[self.basic], self.hi[self.basic]
            below, above = lob - xb, xb - hib
            infeas = np.maximum(below, above)
            if self.m == 0 or infeas.max() <= self.feas_tol:
                return OPTIMAL, None

            bland = self.degenerate >= self.degenerate_limit
            if bland:
                viol = np.flatnonzero(infeas > self.feas_tol)
                r = int(viol[np.argmin(self.basic[viol])])
            else:
                r = int(np.argmax(infeas))
            sigma = 1.0 if below[r] > above[r] else -1.0

            alpha_r = self.row(r)
            s_alpha = sigma * alpha_r
            movable = (self.state != BASIC) & ~self.excluded & (self.lo < self.hi)
            eligible = movable & (((self.state == AT_LOWER) & (s_alpha < -self.pivot_tol)) |
                                  ((self.state == AT_UPPER) & (s_alpha > self.pivot_tol)) |
                                  ((self.state == AT_ZERO) & (np.abs(alpha_r) > self.pivot_tol)))
            cands = np.flatnonzero(eligible)
            if len(cands) == 0:
                return INFEASIBLE, sigma * self.unit_row(r)

            d = self.reduced_costs()
            ratios = np.abs(d[cands]) / np.abs(alpha_r[cands])
            best = ratios.min()
            ties = cands[ratios <= best + TIE_TOL]
            if bland:
                q = int(ties.min())
            else:
                mags = np.abs(alpha_r[ties])
                q = int(ties[np.flatnonzero(mags >= mags.max() - TIE_TOL)[0]])

            self.degenerate = self.degenerate + 1 if best <= TIE_TOL else 0

            alpha_q = self.column(q)
            if abs(alpha_q[r]) <= self.pivot_tol:
                # the row and column disagree numerically; start from a fresh factor
                if not self.refactor():
                    return ITERATION_LIMIT, None
                self.iterations += 1
                self.update_primal()
                continue
            p = self.basic[r]
            self.pivot(r, q, alpha_q, self.leaving_state_for(p, to_upper=sigma < 0))
            self.update_primal()


    def dual_feasible(self) -> bool:
        """ Flip nonbasic columns to the bound their reduced cost asks for; False if one cannot move """
        d = self.reduced_costs()
        for j in np.flatnonzero(self.state != BASIC):
            if self.lo[j] == self.hi[j] or self.excluded[j]:
                continue
            if d[j] < -self.opt_tol and self.state[j] != AT_UPPER:
                if not np.isfinite(self.hi[j]):
                    return False
                self.state[j] = AT_UPPER
            elif d[j] > self.opt_tol and self.state[j] != AT_LOWER:
                if not np.isfinite(self.lo[j]):
                    return False
                self.state[j] = AT_LOWER
        return True



def _computational_form(problem: LpProblem):
    m, n = problem.m, problem.n
    A = sp.hstack([problem.A, sp.identity(m, format='csr')], format='csc')
    s_lo, s_hi = slack_bounds(problem.senses)
    lo = np.concatenate([problem.lo, s_lo])
    hi = np.concatenate([problem.hi, s_hi])
    cost = np.concatenate([problem.c, np.zeros(m)])
    return A, cost, lo, hi


def _package(problem: LpProblem, sim: _Simplex, status: str, farkas=None) -> LpSolution:
    n, N = problem.n, problem.n + problem.m
    if status != OPTIMAL:
        return LpSolution(status, None, None, None, None, None, sim.iterations, farkas)

    x = sim.x[:n].copy()
    x = np.clip(x, problem.lo, problem.hi)
    y = sim.duals()
    d = (problem.c - problem.A.T @ y)
    d[[j for j in sim.basic if j < n]] = 0.0
    at_upper = frozenset(int(j) for j in np.flatnonzero(sim.state[:N] == AT_UPPER))
    # an artificial still basic is +-e_i on a redundant row i; the slack of row i spans the same column
    basic = tuple(int(j) if j < N else n + int(sim.A.indices[sim.A.indptr[j]]) for j in sim.basic)
    basis = Basis(basic, at_upper)
    return LpSolution(OPTIMAL, x, float(problem.c @ x), y, d, basis, sim.iterations)


def _solve_without_rows(problem: LpProblem) -> LpSolution:
    rest = np.where(np.isfinite(problem.lo), problem.lo, np.where(np.isfinite(problem.hi), problem.hi, 0.0))
    x = np.where(problem.c > 0, problem.lo, np.where(problem.c < 0, problem.hi, rest))
    if not np.all(np.isfinite(x)):
        return LpSolution(UNBOUNDED, None, None, None, None, None, 0)
    return LpSolution(OPTIMAL, x, float(problem.c @ x), np.zeros(0), problem.c.copy(), Basis((), frozenset()), 0)


def _phase_one(problem: LpProblem, config) -> LpSolution:
    """ Artificials on the rows the slack basis leaves infeasible, then primal phase 2 """
    A, cost, lo, hi = _computational_form(problem)
    m, n, N = problem.m, problem.n, problem.n + problem.m

    trial = _Simplex(A, problem.rhs, cost, lo, hi, config)
    trial.set_basis(range(n, N))
    x = trial.nonbasic_values()
    resid = problem.rhs - problem.A @ x[:n]

    art_rows, art_signs, slack_states = [], [], {}
    for i in range(m):
        clipped = min(max(resid[i], lo[n + i]), hi[n + i])
        if abs(clipped - resid[i]) > 0:
            art_rows.append(i)
            art_signs.append(np.sign(resid[i] - clipped))
            slack_states[n + i] = AT_LOWER if clipped == lo[n + i] else AT_UPPER

    k = len(art_rows)
    if k:
        art = sp.csc_matrix((np.array(art_signs, dtype=float), (np.array(art_rows, dtype=int), np.arange(k))),
                            shape=(m, k))
        A_ext = sp.hstack([A, art], format='csc')
    else:
        A_ext = A
    lo_ext, hi_ext = np.concatenate([lo, np.zeros(k)]), np.concatenate([hi, np.full(k, np.inf)])
    cost_one = np.concatenate([np.zeros(N), np.ones(k)])

    sim = _Simplex(A_ext, problem.rhs, cost_one, lo_ext, hi_ext, config)
    basic = np.arange(n, N)
    for t, i in enumerate(art_rows):
        basic[i] = N + t
    sim.set_basis(basic)
    for j, st in slack_states.items():
        sim.state[j] = st
    if not sim.refactor():
        return LpSolution(ITERATION_LIMIT, None, None, None, None, None, 0)

    status = sim.primal()
    if status != OPTIMAL:
        return _package(problem, sim, status)
    if sim.objective() > config['FEAS_TOL'] * max(1.0, float(np.abs(problem.rhs).max(initial=0.0))):
        return LpSolution(INFEASIBLE, None, None, None, None, None, sim.iterations, sim.duals())

    # Drive artificials out of the basis; one left behind marks a redundant row and stays fixed at 0
    for r in range(m):
        if sim.basic[r] >= N:
            alpha_r = sim.row(r)[:N]
            alpha_r[sim.state[:N] == BASIC] = 0.0
            q = int(np.argmax(np.abs(alpha_r)))
            if abs(alpha_r[q]) > config['PIVOT_TOL']:
                sim.pivot(r, q, sim.column(q), AT_LOWER)
    sim.excluded[N:] = True
    sim.hi[N:] = 0.0
    sim.refactor()

    sim.cost = np.concatenate([cost, np.zeros(k)])
    status = sim.primal()
    return _package(problem, sim, status)



def solve_lp(problem: LpProblem, warm_start: Optional[Basis] = None,
             config: Optional[Union[dict, FancyDict]] = None) -> LpSolution:
    """
    Solve an LP by the bounded revised simplex.

    A dual feasible start (a warm basis after bound changes or added rows, or the slack basis with
    every column resting at the bound its cost favours) goes through the dual simplex. Anything else
    goes through a primal phase one with artificial columns.

    Parameters:
    -----------
        problem: LpProblem
            The LP
        warm_start: Basis
            Basis of an earlier solve with the same columns and at most as many rows.
            Rows added since get their slacks basic.
        config: dict
            Overrides of DEFAULT_LP_CONFIG

    Returns:
    -------
    LpSolution
        status is one of Optimal, Infeasible, Unbounded, IterationLimit.
        An infeasible dual simplex run records the Farkas row multipliers.
    """
    config = {**DEFAULT_LP_CONFIG, **(config or {})}
    if problem.m == 0:
        return _solve_without_rows(problem)

    A, cost, lo, hi = _computational_form(problem)
    m, n = problem.m, problem.n
    sim = _Simplex(A, problem.rhs, cost, lo, hi, config)

    started = False
    if warm_start is not None and len(warm_start.basic) <= m and all(j < n + m for j in warm_start.basic):
        basic = list(warm_start.basic) + [n + i for i in range(len(warm_start.basic), m)]
        if len(set(basic)) == m:
            sim.set_basis(basic, warm_start.at_upper)
            started = sim.refactor() and sim.dual_feasible()

    if not started:
        sim = _Simplex(A, problem.rhs, cost, lo, hi, config)
        prefer_upper = frozenset(np.flatnonzero(problem.c < 0).tolist())
        sim.set_basis(range(n, n + m), prefer_upper)
        sim.refactor()
        started = sim.dual_feasible()

    if not started:
        return _phase_one(problem, config)

    status, farkas = sim.dual()
    if status == OPTIMAL:
        # mop up any dual infeasibility left by round-off
        status = sim.primal()
    return _package(problem, sim, status, farkas)



def resolve_with_added_rows(problem: LpProblem, solution: LpSolution, new_rows,
                            config: Optional[Union[dict, FancyDict]] = None) -> Tuple[LpProblem, LpSolution]:
    """
    Append rows (A_new, senses, rhs) and reoptimise from the previous basis with the new slacks basic.
    """
    A_new, senses, rhs = new_rows
    grown = problem._replace(A=sp.vstack([problem.A, sp.csr_matrix(A_new)], format='csr'),
                             senses=tuple(problem.senses) + tuple(senses),
                             rhs=np.concatenate([problem.rhs, np.asarray(rhs, dtype=float)]))
    return grown, solve_lp(grown, solution.basis, config)
