"""Numba implementations of the Galerkin pair kernels and potential evaluation.

pair_kernels_chunk fills, for test elements [e0, e1) against all trial
elements, the three local kernel matrices in TRIAL-MAJOR (transposed) layout

    KG[3j+b, 3i+a]   = sum w G(x,y)        f_a(x) . f_b(y)
    Kdiv[3j+b, 3i+a] = sum w G(x,y)        div f_a  div f_b
    KC[3j+b, 3i+a]   = sum w grad_x G(x,y) . (f_b(y) x f_a(x))

with unsigned local RWG basis f_a = L_a/(2A) (x - V_a).  Weights include the
(2 A_test)(2 A_trial) simplex-to-physical factors.  Adjacent same-mesh pairs
are integrated with the regularizing singular rules; the regular rule is
graded by the pair distance (near upgrade below 0.5 diameters, far downgrade
beyond 2 diameters).
"""

import numba as nb
import numpy as np

INV4PI = 1.0 / (4.0 * np.pi)


@nb.njit(cache=True, parallel=True, fastmath=True)
def pair_kernels_chunk(
    e0, e1, k,
    corners_a, areas_a, cent_a, rad_a, diam_a, verts_a,
    pts_a_reg, bas_a_reg, pts_a_near, bas_a_near, pts_a_far, bas_a_far, bdiv_a,
    corners_b, areas_b, cent_b, rad_b, diam_b, verts_b,
    pts_b_reg, bas_b_reg, pts_b_near, bas_b_near, pts_b_far, bas_b_far, bdiv_b,
    w_reg, w_near, w_far, same_mesh, symmetric,
    co_bx, co_by, co_w, ed_bx, ed_by, ed_w, vx_bx, vx_by, vx_w,
    KG, Kdiv, KC,
):
    nb_tri = corners_b.shape[0]
    for ei in nb.prange(e1 - e0):
        e = e0 + ei
        ca = corners_a[e]
        aa = areas_a[e]
        perm_x = np.empty(3, dtype=np.int64)
        perm_y = np.empty(3, dtype=np.int64)
        accG = np.empty((3, 3), dtype=np.complex128)
        accC = np.empty((3, 3), dtype=np.complex128)
        xbuf = np.empty(3, dtype=np.float64)
        ybuf = np.empty(3, dtype=np.float64)
        f_start = e if symmetric else 0
        for f in range(f_start, nb_tri):
            scale = 4.0 * aa * areas_b[f]
            nshared = 0
            if same_mesh:
                for p in range(3):
                    for q in range(3):
                        if verts_a[e, p] == verts_b[f, q]:
                            perm_x[nshared] = p
                            perm_y[nshared] = q
                            nshared += 1
            for a in range(3):
                for b in range(3):
                    accG[a, b] = 0.0
                    accC[a, b] = 0.0
            if nshared == 0:
                dx = cent_a[e, 0] - cent_b[f, 0]
                dy = cent_a[e, 1] - cent_b[f, 1]
                dz = cent_a[e, 2] - cent_b[f, 2]
                dist = np.sqrt(dx * dx + dy * dy + dz * dz) - rad_a[e] - rad_b[f]
                dmax = max(diam_a[e], diam_b[f])
                if dist < 0.5 * dmax:
                    sumG = _regular_pair(
                        k, scale, pts_a_near[e], bas_a_near[e], pts_b_near[f],
                        bas_b_near[f], w_near, accG, accC,
                    )
                elif dist > 2.0 * dmax:
                    sumG = _regular_pair(
                        k, scale, pts_a_far[e], bas_a_far[e], pts_b_far[f],
                        bas_b_far[f], w_far, accG, accC,
                    )
                else:
                    sumG = _regular_pair(
                        k, scale, pts_a_reg[e], bas_a_reg[e], pts_b_reg[f],
                        bas_b_reg[f], w_reg, accG, accC,
                    )
            else:
                if nshared == 3:
                    # canonical order: ascending global vertex id on both sides
                    for p in range(3):
                        for q in range(p + 1, 3):
                            if verts_a[e, perm_x[p]] > verts_a[e, perm_x[q]]:
                                tmp = perm_x[p]; perm_x[p] = perm_x[q]; perm_x[q] = tmp
                            if verts_b[f, perm_y[p]] > verts_b[f, perm_y[q]]:
                                tmp = perm_y[p]; perm_y[p] = perm_y[q]; perm_y[q] = tmp
                    sumG = _singular_pair(
                        k, scale, ca, aa, corners_b[f], areas_b[f],
                        co_bx, co_by, co_w, perm_x, perm_y, xbuf, ybuf, accG, accC,
                    )
                elif nshared == 2:
                    if verts_a[e, perm_x[0]] > verts_a[e, perm_x[1]]:
                        tmp = perm_x[0]; perm_x[0] = perm_x[1]; perm_x[1] = tmp
                        tmp = perm_y[0]; perm_y[0] = perm_y[1]; perm_y[1] = tmp
                    perm_x[2] = 3 - perm_x[0] - perm_x[1]
                    perm_y[2] = 3 - perm_y[0] - perm_y[1]
                    sumG = _singular_pair(
                        k, scale, ca, aa, corners_b[f], areas_b[f],
                        ed_bx, ed_by, ed_w, perm_x, perm_y, xbuf, ybuf, accG, accC,
                    )
                else:
                    p0 = perm_x[0]; q0 = perm_y[0]
                    perm_x[1] = (p0 + 1) % 3; perm_x[2] = (p0 + 2) % 3
                    perm_y[1] = (q0 + 1) % 3; perm_y[2] = (q0 + 2) % 3
                    sumG = _singular_pair(
                        k, scale, ca, aa, corners_b[f], areas_b[f],
                        vx_bx, vx_by, vx_w, perm_x, perm_y, xbuf, ybuf, accG, accC,
                    )
            for b in range(3):
                row = 3 * f + b
                for a in range(3):
                    col = 3 * ei + a
                    KG[row, col] += accG[a, b]
                    Kdiv[row, col] += sumG * (bdiv_a[e, a] * bdiv_b[f, b])
                    KC[row, col] += accC[a, b]


@nb.njit(cache=True, inline="always", fastmath=True)
def _regular_pair(k, scale, pts_x, bas_x, pts_y, bas_y, w, accG, accC):
    nqx = pts_x.shape[0]
    nqy = pts_y.shape[0]
    sumG = 0.0 + 0.0j
    for p in range(nqx):
        x0 = pts_x[p, 0]; x1 = pts_x[p, 1]; x2 = pts_x[p, 2]
        wp = scale * w[p]
        for q in range(nqy):
            dx = x0 - pts_y[q, 0]
            dy = x1 - pts_y[q, 1]
            dz = x2 - pts_y[q, 2]
            r = np.sqrt(dx * dx + dy * dy + dz * dz)
            wG = np.exp(1j * k * r) * (wp * w[q] * INV4PI / r)
            gfac = wG * (1j * k - 1.0 / r) / r
            sumG += wG
            gx = gfac * dx; gy = gfac * dy; gz = gfac * dz
            for b in range(3):
                fbx = bas_y[q, b, 0]; fby = bas_y[q, b, 1]; fbz = bas_y[q, b, 2]
                cbx = gy * fbz - gz * fby
                cby = gz * fbx - gx * fbz
                cbz = gx * fby - gy * fbx
                for a in range(3):
                    fax = bas_x[p, a, 0]; fay = bas_x[p, a, 1]; faz = bas_x[p, a, 2]
                    accG[a, b] += wG * (fax * fbx + fay * fby + faz * fbz)
                    accC[a, b] += fax * cbx + fay * cby + faz * cbz
    return sumG


@nb.njit(cache=True, inline="always", fastmath=True)
def _singular_pair(k, scale, ca, aa, cb, ab, bx, by, w, perm_x, perm_y, x, y, accG, accC):
    npts = w.shape[0]
    sumG = 0.0 + 0.0j
    La0 = _edge_len(ca, 0) / (2.0 * aa)
    La1 = _edge_len(ca, 1) / (2.0 * aa)
    La2 = _edge_len(ca, 2) / (2.0 * aa)
    Lb0 = _edge_len(cb, 0) / (2.0 * ab)
    Lb1 = _edge_len(cb, 1) / (2.0 * ab)
    Lb2 = _edge_len(cb, 2) / (2.0 * ab)
    sax = (La0, La1, La2)
    sbx = (Lb0, Lb1, Lb2)
    for p in range(npts):
        for c in range(3):
            x[c] = (bx[p, 0] * ca[perm_x[0], c] + bx[p, 1] * ca[perm_x[1], c]
                    + bx[p, 2] * ca[perm_x[2], c])
            y[c] = (by[p, 0] * cb[perm_y[0], c] + by[p, 1] * cb[perm_y[1], c]
                    + by[p, 2] * cb[perm_y[2], c])
        dx = x[0] - y[0]
        dy = x[1] - y[1]
        dz = x[2] - y[2]
        r = np.sqrt(dx * dx + dy * dy + dz * dz)
        wG = np.exp(1j * k * r) * (scale * w[p] * INV4PI / r)
        gfac = wG * (1j * k - 1.0 / r) / r
        sumG += wG
        gx = gfac * dx; gy = gfac * dy; gz = gfac * dz
        for b in range(3):
            s = sbx[b]
            fbx = s * (y[0] - cb[b, 0]); fby = s * (y[1] - cb[b, 1]); fbz = s * (y[2] - cb[b, 2])
            cbx = gy * fbz - gz * fby
            cby = gz * fbx - gx * fbz
            cbz = gx * fby - gy * fbx
            for a in range(3):
                t = sax[a]
                fax = t * (x[0] - ca[a, 0]); fay = t * (x[1] - ca[a, 1]); faz = t * (x[2] - ca[a, 2])
                accG[a, b] += wG * (fax * fbx + fay * fby + faz * fbz)
                accC[a, b] += fax * cbx + fay * cby + faz * cbz
    return sumG


@nb.njit(cache=True, inline="always")
def _edge_len(corners, a):
    va = corners[(a + 1) % 3]
    vb = corners[(a + 2) % 3]
    return np.sqrt((vb[0] - va[0]) ** 2 + (vb[1] - va[1]) ** 2 + (vb[2] - va[2]) ** 2)


@nb.njit(cache=True, parallel=True, fastmath=True)
def potentials_of_density(k, pts, vvals, vdivs, weights, points, out_E, out_H):
    """Electric and magnetic potentials of a quadrature-sampled density.

    pts: (nt, nq, 3) physical quadrature points, weights (nt, nq) include the
    2A factors, vvals/vdivs: complex density values at the points.
    """
    nt, nq = pts.shape[0], pts.shape[1]
    npts = points.shape[0]
    ik = 1j * k
    for i in nb.prange(npts):
        x0 = points[i, 0]; x1 = points[i, 1]; x2 = points[i, 2]
        e0 = 0.0 + 0.0j; e1 = 0.0 + 0.0j; e2 = 0.0 + 0.0j
        h0 = 0.0 + 0.0j; h1 = 0.0 + 0.0j; h2 = 0.0 + 0.0j
        for t in range(nt):
            for q in range(nq):
                dx = x0 - pts[t, q, 0]
                dy = x1 - pts[t, q, 1]
                dz = x2 - pts[t, q, 2]
                r = np.sqrt(dx * dx + dy * dy + dz * dz)
                G = np.exp(ik * r) * (INV4PI / r) * weights[t, q]
                gfac = G * (ik - 1.0 / r) / r
                v0 = vvals[t, q, 0]; v1 = vvals[t, q, 1]; v2 = vvals[t, q, 2]
                dvg = (gfac / ik) * vdivs[t, q]
                e0 += ik * G * v0 - dvg * dx
                e1 += ik * G * v1 - dvg * dy
                e2 += ik * G * v2 - dvg * dz
                h0 += gfac * (dy * v2 - dz * v1)
                h1 += gfac * (dz * v0 - dx * v2)
                h2 += gfac * (dx * v1 - dy * v0)
        out_E[i, 0] = e0; out_E[i, 1] = e1; out_E[i, 2] = e2
        out_H[i, 0] = h0; out_H[i, 1] = h1; out_H[i, 2] = h2
