"""
Outer approximation of the Weymouth cones by tangent cuts, and the pool that keeps them.
"""
import numpy as np
import scipy.sparse as sp
from typing import List, Iterable, Optional

from models.program import ConeRow, LinRow, PLAIN, GE


def cone_violation(cone: ConeRow, x: np.ndarray) -> float:
    """ w phi^2 - z gamma, in the units of gamma """
    wphi2 = cone.w * x[cone.phi] ** 2
    z = 1.0 if cone.z is None else x[cone.z]
    return wphi2 - z * x[cone.gamma]


def tangent_cut(cone: ConeRow, phi_hat: float) -> LinRow:
    """
    plain:        gamma >= 2 w phi_hat phi - w phi_hat^2
    perspective:  gamma >= 2 w phi_hat phi - w phi_hat^2 z
    """
    w = cone.w
    coefs = {cone.gamma: 1.0, cone.phi: -2.0 * w * phi_hat}
    if cone.form == PLAIN:
        return LinRow(tuple(sorted(coefs.items())), GE, -w * phi_hat ** 2, 'oa')
    coefs[cone.z] = w * phi_hat ** 2
    return LinRow(tuple(sorted(coefs.items())), GE, 0.0, 'oa')


def root_cuts(cones: Iterable[ConeRow], phi_max: float) -> List[LinRow]:
    """ Tangents at -Phi, -Phi/2, Phi/2 and Phi on every cone """
    if phi_max <= 0:
        return []
    points = [-phi_max, -phi_max / 2, phi_max / 2, phi_max]
    return [tangent_cut(c, p) for c in cones for p in points]


def separate_cone_cuts(point: np.ndarray, cones: Iterable[ConeRow], cone_tol: float,
                       phi_max: float, z_floor: float) -> List[LinRow]:
    """
    One tangent per cone violated at `point` by more than `cone_tol`.

    Perspective cones are linearised at phi_hat / max(z_hat, z_floor), clipped to [-Phi, Phi].
    """
    cuts = []
    for c in cones:
        phi_hat = point[c.phi]
        if cone_violation(c, point) <= cone_tol:
            continue
        if c.form != PLAIN:
            phi_hat = float(np.clip(phi_hat / max(point[c.z], z_floor), -phi_max, phi_max))
        cuts.append(tangent_cut(c, phi_hat))
    return cuts



class CutPool(object):
    """
    Global cut store. Rows only ever get appended, so row k of the pool is stable across nodes.
    """
    def __init__(self, n: int):
        self.n = n
        self.rows: List[LinRow] = []
        self._keys = set()
        self._matrix = None

    @staticmethod
    def key(row: LinRow):
        return tuple((i, round(c, 9)) for i, c in row.coefs), row.sense, round(row.rhs, 9)

    def __len__(self):
        return len(self.rows)

    def __contains__(self, row: LinRow):
        return self.key(row) in self._keys

    def add(self, rows: Iterable[LinRow]) -> int:
        added = 0
        for r in rows:
            k = self.key(r)
            if k in self._keys:
                continue
            self._keys.add(k)
            self.rows.append(r)
            added += 1
        if added:
            self._matrix = None
        return added

    def matrix(self, rows: Optional[List[LinRow]] = None):
        """ (A, senses, rhs) of the pool, or of `rows` when given """
        if rows is None and self._matrix is not None:
            return self._matrix
        rows = self.rows if rows is None else rows
        data = [c for r in rows for _, c in r.coefs]
        cols = [i for r in rows for i, _ in r.coefs]
        indptr = np.cumsum([0] + [len(r.coefs) for r in rows])
        A = sp.csr_matrix((np.array(data, dtype=float), np.array(cols, dtype=int), indptr), shape=(len(rows), self.n))
        out = (A, tuple(r.sense for r in rows), np.array([r.rhs for r in rows], dtype=float))
        if rows is self.rows:
            self._matrix = out
        return out
