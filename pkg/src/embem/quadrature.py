"""Quadrature on triangles and triangle pairs.

Regular rules are collapsed Gauss-Jacobi x Gauss-Legendre tensor rules on the
reference triangle (positive weights, interior points, arbitrary order).

Singular pair rules regularize the 1/|x-y| Green's-kernel singularity for
coincident, edge-adjacent and vertex-adjacent panels.  The classical relative
coordinates (s, t) with 0 <= t <= s <= 1 parameterize a panel (A, B, C) as
x = A + s(B-A) + t(C-B); the singular configurations are decomposed into
sectors by L1-polar (Duffy) substitutions so that every region maps [0,1]^4
smoothly with the radial variable factored out of the distance:

  coincident      6 regions, split by sign quadrants of (s1-s2, t1-t2) and,
                  in the (+,+)/(-,-) quadrants, by which difference dominates;
  edge-adjacent   4 regions (sign of s1-s2 x which of t1, t2+|s1-s2| dominates);
  vertex-adjacent 2 regions (which panel's radial coordinate dominates).

All rules produce barycentric point pairs plus weights such that
integral = (2*area1) * (2*area2) * sum_i w_i * k(x_i, y_i).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import InvalidParameter, UnsupportedOrder

MAX_GAUSS_ORDER = 10


@dataclass(frozen=True)
class TriangleRule:
    """Quadrature rule on the reference triangle in barycentric coordinates."""

    order: int
    points: np.ndarray  # (n, 3) barycentric
    weights: np.ndarray  # (n,), sums to 1/2


# compact positive-weight symmetric rules (barycentric orbits, weights sum to 1)
_SYMMETRIC_RULES = {
    2: [
        (2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0),
    ],
    4: [
        (0.108103018168070, 0.445948490915965, 0.223381589678011),
        (0.816847572980459, 0.091576213509771, 0.109951743655322),
    ],
    6: [
        (0.873821971016996, 0.063089014491502, 0.050844906370207),
        (0.501426509658179, 0.249286745170910, 0.116786275726379),
        (0.636502499121399, 0.310352451033785, 0.082851075618374, 0.053145049844816),
    ],
}


def _symmetric_rule(order):
    pts, wts = [], []
    for orbit in _SYMMETRIC_RULES[order]:
        if len(orbit) == 3:
            a, b, w = orbit
            coords = {(a, b, b), (b, a, b), (b, b, a)}
        else:
            a, b, c, w = orbit
            coords = {
                (a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a),
            }
        for p in sorted(coords):
            pts.append(p)
            wts.append(w)
    return TriangleRule(order, np.array(pts), 0.5 * np.array(wts))


@lru_cache(maxsize=None)
def gauss_rule(order: int) -> TriangleRule:
    """Rule exact for bivariate polynomials of total degree <= order."""
    if not isinstance(order, (int, np.integer)) or not (1 <= order <= MAX_GAUSS_ORDER):
        raise UnsupportedOrder(f"order must be in 1..{MAX_GAUSS_ORDER}, got {order!r}")
    if order in _SYMMETRIC_RULES:
        return _symmetric_rule(order)
    m = (order + 2) // 2  # Gauss points per direction
    xj, wj = roots_jacobi(m, 1.0, 0.0)  # weight (1-x) on [-1, 1]
    u = (xj + 1.0) / 2.0
    wu = wj / 4.0  # integrates (1-u) f(u) on [0,1]
    xl, wl = roots_legendre(m)
    v = (xl + 1.0) / 2.0
    wv = wl / 2.0
    uu, vv = np.meshgrid(u, v, indexing="ij")
    x = uu.ravel()
    y = (vv * (1.0 - uu)).ravel()
    w = np.outer(wu, wv).ravel()
    pts = np.column_stack([1.0 - x - y, x, y])
    return TriangleRule(order, pts, w)


def _gauss01(n: int):
    x, w = roots_legendre(n)
    return (x + 1.0) / 2.0, w / 2.0


def _st_to_bary(s, t):
    """Map relative coordinates (s, t), 0<=t<=s<=1, to barycentric w.r.t. (A,B,C)."""
    return np.stack([1.0 - s, s - t, t], axis=-1)


@dataclass(frozen=True)
class SingularRule:
    """Regularized 4D rule for one singular pair configuration.

    bx, by are (n, 3) barycentric coordinates on the test / trial panel in the
    canonical vertex ordering (shared entities first); weights include all
    transformation jacobians but not the 2*area factors.
    """

    case: str  # coincident | edge | vertex
    order: int
    bx: np.ndarray
    by: np.ndarray
    weights: np.ndarray

    @property
    def declared_degree(self) -> int:
        """Total polynomial kernel degree integrated exactly (see tests)."""
        return max(0, self.order - 2)


@lru_cache(maxsize=None)
def singular_rule(case: str, order: int = 4) -> SingularRule:
    if not (1 <= order <= 12):
        raise UnsupportedOrder(f"singular rule order must be in 1..12, got {order!r}")
    g, gw = _gauss01(order)
    q = np.stack(np.meshgrid(g, g, g, g, indexing="ij"), axis=-1).reshape(-1, 4)
    qw = np.stack(np.meshgrid(gw, gw, gw, gw, indexing="ij"), axis=-1).reshape(-1, 4).prod(axis=1)
    a, b, c, d = q[:, 0], q[:, 1], q[:, 2], q[:, 3]

    SX, TX, SY, TY, W = [], [], [], [], []

    def region(s1, t1, s2, t2, jac):
        SX.append(s1); TX.append(t1); SY.append(s2); TY.append(t2); W.append(jac * qw)

    if case == "vertex":
        # shared vertex A; radial scale xi on the dominant panel
        xi, e1, e2, e3 = a, b, c, d
        region(xi, xi * e1, xi * e2, xi * e2 * e3, xi**3 * e2)
        region(xi * e2, xi * e2 * e3, xi, xi * e1, xi**3 * e2)
    elif case == "edge":
        # shared edge A->B; delta = s1 - s2
        xi, al, be, et = a, b, c, d
        s1 = xi + (1.0 - xi) * et
        # t1 dominant
        region(s1, xi, s1 - xi * al * (1.0 - be), xi * al * be, xi**2 * al * (1.0 - xi))
        # t2 + delta dominant
        region(s1, xi * al, s1 - xi * (1.0 - be), xi * be, xi**2 * (1.0 - xi))
        # mirrored in the panel roles
        region(s1 - xi * al * (1.0 - be), xi * al * be, s1, xi, xi**2 * al * (1.0 - xi))
        region(s1 - xi * (1.0 - be), xi * be, s1, xi * al, xi**2 * (1.0 - xi))
    elif case == "coincident":
        xi, et, e2, e3 = a, b, c, d
        w_pp = xi * (1.0 - xi) ** 2 * (1.0 - e2)
        # quadrant (+,+), ds >= dt
        u = xi * (1.0 - et) + (1.0 - xi) * e2
        t1 = xi * et + (1.0 - xi) * (1.0 - e2) * e3
        s1 = u + t1
        pp1 = (s1, t1, s1 - xi, t1 - xi * et)
        # quadrant (+,+), dt >= ds
        t1b = xi + (1.0 - xi) * e2
        s1b = (1.0 - xi) * (1.0 - e2) * e3 + t1b
        pp2 = (s1b, t1b, s1b - xi * et, t1b - xi)
        # quadrant (+,-): L1-polar in (ds, -dt)
        rho, ze = xi, et
        uc = rho + (1.0 - rho) * e2
        t1c = (1.0 - rho) * (1.0 - e2) * e3
        s1c = uc + t1c
        pm = (s1c, t1c, s1c - rho * ze, t1c + rho * (1.0 - ze))
        w_pm = rho * (1.0 - rho) ** 2 * (1.0 - e2)
        for (s1r, t1r, s2r, t2r), wr in ((pp1, w_pp), (pp2, w_pp), (pm, w_pm)):
            region(s1r, t1r, s2r, t2r, wr)
            region(s2r, t2r, s1r, t1r, wr)  # mirrored quadrant
    else:
        raise InvalidParameter(f"unknown singular case {case!r}")

    s1 = np.concatenate(SX); t1 = np.concatenate(TX)
    s2 = np.concatenate(SY); t2 = np.concatenate(TY)
    w = np.concatenate(W)
    keep = w > 1e-300
    bx = _st_to_bary(s1, t1)[keep]
    by = _st_to_bary(s2, t2)[keep]
    return SingularRule(case, order, bx, by, np.ascontiguousarray(w[keep]))


# -- pair integration (reference implementation; assembly uses kernels/) ------


def pair_rule_regular(rule_test: TriangleRule, rule_trial: TriangleRule):
    """Tensor rule over a disjoint pair: (bx, by, w)."""
    nx, ny = len(rule_test.weights), len(rule_trial.weights)
    bx = np.repeat(rule_test.points, ny, axis=0)
    by = np.tile(rule_trial.points, (nx, 1))
    w = np.outer(rule_test.weights, rule_trial.weights).ravel()
    return bx, by, w


def classify_pair(indices1, indices2):
    """Exact adjacency classification from vertex index triples.

    Returns (case, perm1, perm2) where the permutations bring shared vertices
    first, in matching order on both panels.
    """
    if indices1 is None or indices2 is None:
        return "regular", (0, 1, 2), (0, 1, 2)
    i1 = [int(v) for v in indices1]
    i2 = [int(v) for v in indices2]
    shared = [v for v in i1 if v in i2]
    if len(shared) == 3:
        return "coincident", (0, 1, 2), (0, 1, 2)
    if len(shared) == 2:
        a, b = shared
        p1 = (i1.index(a), i1.index(b))
        p1 = p1 + tuple(k for k in range(3) if k not in p1)
        p2 = (i2.index(a), i2.index(b))
        p2 = p2 + tuple(k for k in range(3) if k not in p2)
        return "edge", p1, p2
    if len(shared) == 1:
        a = shared[0]
        p1 = (i1.index(a),) + tuple(k for k in range(3) if k != i1.index(a))
        p2 = (i2.index(a),) + tuple(k for k in range(3) if k != i2.index(a))
        return "vertex", p1, p2
    return "regular", (0, 1, 2), (0, 1, 2)


def integrate_pair(t1, t2, kernel, *, indices1=None, indices2=None,
                   regular_order: int = 4, singular_order: int = 4) -> complex:
    """Double surface integral of a scalar kernel over a triangle pair.

    t1, t2: (3, 3) vertex arrays.  kernel(x, y) must accept (n, 3) point
    batches and return (n,) values.  Adjacency is classified exactly from the
    optional vertex index triples; without them the pair is treated as
    disjoint.
    """
    t1 = np.asarray(t1, dtype=np.float64)
    t2 = np.asarray(t2, dtype=np.float64)
    case, p1, p2 = classify_pair(indices1, indices2)
    if case == "regular":
        r = gauss_rule(regular_order)
        bx, by, w = pair_rule_regular(r, r)
        v1, v2 = t1, t2
    else:
        sr = singular_rule(case, singular_order)
        bx, by, w = sr.bx, sr.by, sr.weights
        v1, v2 = t1[list(p1)], t2[list(p2)]
    x = bx @ v1
    y = by @ v2
    a1 = 0.5 * np.linalg.norm(np.cross(t1[1] - t1[0], t1[2] - t1[0]))
    a2 = 0.5 * np.linalg.norm(np.cross(t2[1] - t2[0], t2[2] - t2[0]))
    vals = np.asarray(kernel(x, y))
    return complex((2.0 * a1) * (2.0 * a2) * np.sum(w * vals))
