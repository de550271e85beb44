"""
Solver-agnostic intermediate representation of the three GTNEP programs.
"""
import numpy as np
import scipy.sparse as sp
from typing import NamedTuple, Optional, Dict, List, Tuple

from network.gas_network import GasNetwork


MISOCP = 'MISOCP'
MINLP = 'MINLP'
PLAMIP = 'PLAMIP'

LE, EQ, GE = '<=', '=', '>='

PLAIN = 'plain'
PERSPECTIVE = 'perspective'

# Branching priority of binary kinds, lower first
BINARY_ORDER = {'yplus': 0, 'yminus': 0, 'zp': 1, 'zc': 1, 'v': 2, 'pla_bin': 3}


class VarRef(NamedTuple):
    index: int
    kind: str
    subject: object
    lo: float
    hi: float
    binary: bool = False

    @property
    def name(self) -> str:
        subject = ','.join(map(str, self.subject)) if isinstance(self.subject, tuple) else self.subject
        return f"{self.kind}({subject})"


class LinRow(NamedTuple):
    coefs: Tuple[Tuple[int, float], ...]
    sense: str
    rhs: float
    tag: str

    def activity(self, x: np.ndarray) -> float:
        return float(sum(c * x[i] for i, c in self.coefs))

    def violation(self, x: np.ndarray) -> float:
        act = self.activity(x)
        if self.sense == LE:
            return max(act - self.rhs, 0.0)
        if self.sense == GE:
            return max(self.rhs - act, 0.0)
        return abs(act - self.rhs)


class ConeRow(NamedTuple):
    """ plain: gamma >= w phi^2, perspective: z gamma >= w phi^2 """
    form: str
    gamma: int
    phi: int
    z: Optional[int]
    w: float
    tag: str

    def violation(self, x: np.ndarray) -> float:
        z = 1.0 if self.z is None else x[self.z]
        return max(self.w * x[self.phi] ** 2 - z * x[self.gamma], 0.0)


class BilinearRow(NamedTuple):
    """ [z] (y+ - y-)(beta_i - beta_j) = w phi^2, z only on candidate pipes """
    yplus: int
    yminus: int
    z: Optional[int]
    beta_i: int
    beta_j: int
    phi: int
    w: float
    tag: str

    def residual(self, x: np.ndarray) -> float:
        z = 1.0 if self.z is None else x[self.z]
        return z * (x[self.yplus] - x[self.yminus]) * (x[self.beta_i] - x[self.beta_j]) - self.w * x[self.phi] ** 2



class MathProgram:
    """
    Variables, linear rows, cone rows and bilinear rows of one model of a network.

    Builders fill a program and hand it out; nothing mutates it afterwards.
    """
    def __init__(self, kind: str, network: GasNetwork):
        self.kind = kind
        self.network = network
        self.vars: List[VarRef] = []
        self.lin: List[LinRow] = []
        self.cones: List[ConeRow] = []
        self.bilinear: List[BilinearRow] = []
        self.objective: Dict[int, float] = {}
        self.var_lookup: Dict[Tuple[str, object], int] = {}

    def add_var(self, kind: str, subject, lo: float = 0.0, hi: float = 1.0, binary: bool = False) -> int:
        key = (kind, subject)
        assert key not in self.var_lookup, f"Variable {kind}({subject}) declared twice"
        idx = len(self.vars)
        self.vars.append(VarRef(idx, kind, subject, float(lo), float(hi), binary))
        self.var_lookup[key] = idx
        return idx

    def add_row(self, coefs: Dict[int, float], sense: str, rhs: float, tag: str) -> LinRow:
        """ Zero coefficients are dropped; repeated indices must be merged by the caller """
        assert sense in (LE, EQ, GE), f"Unknown sense {sense}"
        items = tuple(sorted((i, float(c)) for i, c in coefs.items() if c != 0))
        assert all(np.isfinite(c) for _, c in items), f"Non-finite coefficient in {tag} row"
        row = LinRow(items, sense, float(rhs), tag)
        self.lin.append(row)
        return row

    def var(self, kind: str, subject) -> int:
        return self.var_lookup[(kind, subject)]

    def has_var(self, kind: str, subject) -> bool:
        return (kind, subject) in self.var_lookup

    def ref(self, kind: str, subject) -> VarRef:
        return self.vars[self.var_lookup[(kind, subject)]]

    @property
    def n(self) -> int:
        return len(self.vars)

    @property
    def binaries(self) -> List[VarRef]:
        return [v for v in self.vars if v.binary]

    def branching_order(self) -> List[int]:
        """ Binary indices ordered y before z before v, then by index """
        return [v.index for v in sorted(self.binaries, key=lambda v: (BINARY_ORDER.get(v.kind, 9), v.index))]

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.array([v.lo for v in self.vars], dtype=float)
        hi = np.array([v.hi for v in self.vars], dtype=float)
        return lo, hi

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.n)
        for i, val in self.objective.items():
            c[i] = val
        return c

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(c * x[i] for i, c in self.objective.items()))

    def row_matrix(self, rows: Optional[List[LinRow]] = None):
        """
        CSR matrix, senses and right-hand sides of `rows` (default: all linear rows)
        """
        rows = self.lin if rows is None else rows
        data, indices, indptr = [], [], [0]
        for r in rows:
            for i, c in r.coefs:
                indices.append(i)
                data.append(c)
            indptr.append(len(indices))
        A = sp.csr_matrix((np.array(data, dtype=float), np.array(indices, dtype=int), np.array(indptr, dtype=int)),
                          shape=(len(rows), self.n))
        senses = [r.sense for r in rows]
        rhs = np.array([r.rhs for r in rows], dtype=float)
        return A, senses, rhs

    def lin_violations(self, x: np.ndarray) -> Dict[str, float]:
        """ Max violation per row family """
        out = {}
        for r in self.lin:
            out[r.tag] = max(out.get(r.tag, 0.0), r.violation(x))
        return out

    def __repr__(self):
        return f"MathProgram({self.kind}, vars={self.n}, rows={len(self.lin)}, cones={len(self.cones)}, bilinear={len(self.bilinear)})"



def size_summary(program: MathProgram) -> Dict[str, int]:
    """
    Counts reported for a model. Each bilinear row (y+ - y-)(beta_i - beta_j) expands into four
    quadratic monomials, which is what `quadratic_terms` counts.
    """
    n_bin = len(program.binaries)
    return {
        'binaries': n_bin,
        'continuous': program.n - n_bin,
        'rows': len(program.lin),
        'cones': len(program.cones),
        'nonlinear_rows': len(program.bilinear),
        'quadratic_terms': len(program.cones) + 4 * len(program.bilinear),
    }
