"""Independent brute-force integration oracles used only by the test suite.

Two independent routes are combined for singular pair integrals of the
Helmholtz kernel G = exp(ikr)/(4 pi r):

  * the static part 1/(4 pi r): inner integral via the classical closed-form
    single-layer potential of a constant density on a flat triangle
    (Wilton/Graglia line-integral formulas), outer integral via uniform
    refinement of the test triangle with Aitken extrapolation;
  * the bounded remainder (exp(ikr) - 1)/(4 pi r): 4D subdivision of the pair,
    accumulating non-touching sub-pairs with tensor Gauss (remainder decays
    like 4^-level for bounded kernels) plus Aitken extrapolation.

Neither route shares any code with the production Sauter-Schwab path.
"""

import numpy as np

from embem.quadrature import gauss_rule, pair_rule_regular


def _area(t):
    return 0.5 * np.linalg.norm(np.cross(t[1] - t[0], t[2] - t[0]))


def triangle_static_potential(points, tri):
    """closed-form  int_T dS(y) / |x - y|  for flat triangle `tri`, batch of x."""
    points = np.atleast_2d(np.asarray(points, float))
    tri = np.asarray(tri, float)
    n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    n = n / np.linalg.norm(n)
    scale = max(1.0, np.abs(tri).max())
    out = np.zeros(len(points))
    d = (points - tri[0]) @ n  # signed height
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        s = (b - a) / np.linalg.norm(b - a)
        m = np.cross(s, n)  # in-plane edge normal
        lm = (a - points) @ s
        lp = (b - points) @ s
        t0 = (a - points) @ m
        Rm = np.linalg.norm(points - a, axis=1)
        Rp = np.linalg.norm(points - b, axis=1)
        R02 = t0**2 + d**2
        ok = np.abs(t0) > 1e-14 * scale
        num = Rp + lp
        den = Rm + lm
        ln = np.zeros(len(points))
        good = ok & (num > 1e-300) & (den > 1e-300)
        ln[good] = np.log(num[good] / den[good])
        out += np.where(ok, t0 * ln, 0.0)
        ad = np.abs(d)
        beta = np.arctan2(t0 * lp, R02 + ad * Rp) - np.arctan2(t0 * lm, R02 + ad * Rm)
        out -= np.where(ok, ad * beta, 0.0)
    return out[0] if out.shape == (1,) else out


def _refine_outer(t1, fn, levels=7, order=7):
    """integral over t1 of fn (continuous, kinks allowed) via uniform refinement + Aitken."""
    r = gauss_rule(order)
    partial = []
    tris = [np.asarray(t1, float)]
    total = 0.0
    for lev in range(levels):
        vals = 0.0
        for t in tris:
            x = r.points @ t
            vals += 2.0 * _area(t) * np.sum(r.weights * fn(x))
        partial.append(vals)
        if lev < levels - 1:
            tris = [s for t in tris for s in _split4(t)]
    return _aitken(partial)


def _aitken(seq, rounds=2):
    s = list(seq)
    for _ in range(rounds):
        if len(s) >= 3:
            s = [
                s[i + 2] - (s[i + 2] - s[i + 1]) ** 2 / ((s[i + 2] - s[i + 1]) - (s[i + 1] - s[i]))
                if abs((s[i + 2] - s[i + 1]) - (s[i + 1] - s[i])) > 0
                else s[i + 2]
                for i in range(len(s) - 2)
            ]
    return s[-1]


def _gauss_pair(t1, t2, kernel, order=6):
    r = gauss_rule(order)
    bx, by, w = pair_rule_regular(r, r)
    return (2 * _area(t1)) * (2 * _area(t2)) * np.sum(w * kernel(bx @ t1, by @ t2))


def _split4(t):
    m01 = (t[0] + t[1]) / 2
    m12 = (t[1] + t[2]) / 2
    m20 = (t[2] + t[0]) / 2
    return [
        np.array([t[0], m01, m20]),
        np.array([t[1], m12, m01]),
        np.array([t[2], m20, m12]),
        np.array([m01, m12, m20]),
    ]


def _touching(t1, t2, scale):
    d = np.linalg.norm(t1[:, None, :] - t2[None, :, :], axis=2)
    return d.min() < 1e-12 * scale


def bounded_pair_integral(t1, t2, kernel, levels=6, order=5):
    """4D subdivision oracle for kernels bounded on the pair (kinks allowed)."""
    t1 = np.asarray(t1, float)
    t2 = np.asarray(t2, float)
    scale = max(np.abs(t1).max(), np.abs(t2).max(), 1.0)
    if not _touching(t1, t2, scale):
        return _gauss_pair(t1, t2, kernel, order=order)
    acc = 0.0 + 0.0j
    touching = [(t1, t2)]
    partial = []
    for _ in range(levels):
        nxt = []
        for (a, b) in touching:
            for sa in _split4(a):
                for sb in _split4(b):
                    if _touching(sa, sb, scale):
                        nxt.append((sa, sb))
                    else:
                        acc += _gauss_pair(sa, sb, kernel, order=order)
        touching = nxt
        partial.append(acc)
    return _aitken(partial)


def static_pair_integral(t1, t2, levels=7, order=7):
    """oracle for  int int 1/(4 pi |x-y|)  over a (possibly touching) pair."""
    t2 = np.asarray(t2, float)

    def inner(x):
        return triangle_static_potential(x, t2) / (4 * np.pi)

    return _refine_outer(t1, inner, levels=levels, order=order)


def helmholtz_pair_integral(t1, t2, k, levels=6, order=5):
    """oracle for  int int exp(ik r)/(4 pi r)  over a touching pair."""

    def smooth(x, y):
        r = np.linalg.norm(x - y, axis=1)
        out = np.empty(len(r), dtype=complex)
        small = r < 1e-14
        out[~small] = (np.exp(1j * k * r[~small]) - 1.0) / (4 * np.pi * r[~small])
        out[small] = 1j * k / (4 * np.pi)
        return out

    return static_pair_integral(t1, t2) + bounded_pair_integral(t1, t2, smooth, levels, order)
