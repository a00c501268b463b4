"""Pure-numpy fallback for the hot kernels (same quadrature sums as numba).

Kernel blocks use the same trial-major (transposed) layout as the numba
backend: K[3f+b, 3ei+a].
"""

import numpy as np

INV4PI = 1.0 / (4.0 * np.pi)


def _basis_all(corners, area, x):
    """(n, 3, 3) unsigned local RWG values at points x (n, 3)."""
    out = np.empty((len(x), 3, 3))
    for a in range(3):
        L = np.linalg.norm(corners[(a + 1) % 3] - corners[(a + 2) % 3])
        out[:, a, :] = (L / (2.0 * area)) * (x - corners[a])
    return out


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
    wpair = np.multiply.outer(w_far, w_far)
    for ei in range(e1 - e0):
        e = e0 + ei
        dist = np.linalg.norm(cent_b - cent_a[e], axis=1) - rad_a[e] - rad_b
        dmax = np.maximum(diam_a[e], diam_b)
        near = dist < 0.5 * dmax
        mid = ~near & (dist <= 2.0 * dmax)
        if same_mesh:
            shared_counts = (verts_a[e][:, None, None] == verts_b[None, :, :]).any(0).sum(1)
        else:
            shared_counts = np.zeros(nb_tri, dtype=int)
        skipped = np.zeros(nb_tri, dtype=bool)
        if symmetric:
            skipped[:e] = True
        special = np.flatnonzero((near | mid | (shared_counts > 0)) & ~skipped)
        # vectorized far-rule pass over the rest
        with np.errstate(divide="ignore", invalid="ignore"):
            d = pts_a_far[e][:, None, None, :] - pts_b_far[None, :, :, :]
            r = np.linalg.norm(d, axis=3)
            G = (
                np.exp(1j * k * r) * (INV4PI / r) * wpair[:, None, :]
                * (4.0 * areas_a[e] * areas_b)[None, :, None]
            )
            gfac = G * (1j * k - 1.0 / r) / r
        zero_cols = np.flatnonzero((near | mid | (shared_counts > 0)) | skipped)
        if len(zero_cols):
            G[:, zero_cols, :] = 0.0
            gfac[:, zero_cols, :] = 0.0
        blk = np.einsum("pfq,pac,fqbc->fba", G, bas_a_far[e], bas_b_far)
        KG[:, 3 * ei : 3 * ei + 3] += blk.reshape(-1, 3)
        dv = np.einsum("pfq->f", G)
        Kdiv[:, 3 * ei : 3 * ei + 3] += (
            dv[:, None, None] * bdiv_b[:, :, None] * bdiv_a[e][None, None, :]
        ).reshape(-1, 3)
        cr = np.cross(bas_b_far[None, :, :, :, None, :], bas_a_far[e][:, None, None, None, :, :])
        KC[:, 3 * ei : 3 * ei + 3] += np.einsum(
            "pfqc,pfqbac->fba", gfac[..., None] * d, cr
        ).reshape(-1, 3)
        # special pairs one by one
        for f in special:
            scale = 4.0 * areas_a[e] * areas_b[f]
            shared = [
                (p, q)
                for p in range(3)
                for q in range(3)
                if same_mesh and verts_a[e, p] == verts_b[f, q]
            ]
            if not shared:
                if near[f]:
                    _accumulate_pair_w(
                        ei, f, k, scale, pts_a_near[e], bas_a_near[e], bdiv_a[e],
                        pts_b_near[f], bas_b_near[f], bdiv_b[f], w_near, KG, Kdiv, KC,
                    )
                else:
                    _accumulate_pair_w(
                        ei, f, k, scale, pts_a_reg[e], bas_a_reg[e], bdiv_a[e],
                        pts_b_reg[f], bas_b_reg[f], bdiv_b[f], w_reg, KG, Kdiv, KC,
                    )
                continue
            if len(shared) == 3:
                # canonical ascending global id
                order = np.argsort([verts_a[e, p] for p, _ in shared])
                perm_x = [shared[i][0] for i in order]
                perm_y = [shared[i][1] for i in order]
                bx, by, w = co_bx, co_by, co_w
            elif len(shared) == 2:
                order = np.argsort([verts_a[e, p] for p, _ in shared])
                sx = [shared[i][0] for i in order]
                sy = [shared[i][1] for i in order]
                perm_x = sx + [3 - sx[0] - sx[1]]
                perm_y = sy + [3 - sy[0] - sy[1]]
                bx, by, w = ed_bx, ed_by, ed_w
            else:
                p0, q0 = shared[0]
                perm_x = [p0, (p0 + 1) % 3, (p0 + 2) % 3]
                perm_y = [q0, (q0 + 1) % 3, (q0 + 2) % 3]
                bx, by, w = vx_bx, vx_by, vx_w
            x = bx @ corners_a[e][perm_x]
            y = by @ corners_b[f][perm_y]
            d2 = x - y
            r2 = np.linalg.norm(d2, axis=1)
            G2 = np.exp(1j * k * r2) * (INV4PI / r2) * (scale * w)
            gf2 = G2 * (1j * k - 1.0 / r2) / r2
            fx = _basis_all(corners_a[e], areas_a[e], x)
            fy = _basis_all(corners_b[f], areas_b[f], y)
            KG[3 * f : 3 * f + 3, 3 * ei : 3 * ei + 3] += np.einsum(
                "n,nac,nbc->ba", G2, fx, fy
            )
            Kdiv[3 * f : 3 * f + 3, 3 * ei : 3 * ei + 3] += G2.sum() * np.outer(
                bdiv_b[f], bdiv_a[e]
            )
            KC[3 * f : 3 * f + 3, 3 * ei : 3 * ei + 3] += np.einsum(
                "nc,nbac->ba", gf2[:, None] * d2, np.cross(fy[:, :, None, :], fx[:, None, :, :])
            )


def _accumulate_pair_w(ei, f, k, scale, x, bas_x, div_x, y, bas_y, div_y, w1d, KG, Kdiv, KC):
    d = x[:, None, :] - y[None, :, :]
    r = np.linalg.norm(d, axis=2)
    G = np.exp(1j * k * r) * (INV4PI / r) * (scale * np.multiply.outer(w1d, w1d))
    gfac = G * (1j * k - 1.0 / r) / r
    KG[3 * f : 3 * f + 3, 3 * ei : 3 * ei + 3] += np.einsum("pq,pac,qbc->ba", G, bas_x, bas_y)
    Kdiv[3 * f : 3 * f + 3, 3 * ei : 3 * ei + 3] += G.sum() * np.outer(div_y, div_x)
    KC[3 * f : 3 * f + 3, 3 * ei : 3 * ei + 3] += np.einsum(
        "pqc,pqabc->ba",
        gfac[:, :, None] * d,
        np.cross(bas_y[None, :, None, :, :], bas_x[:, None, :, None, :]),
    )


def potentials_of_density(k, pts, vvals, vdivs, weights, points, out_E, out_H):
    flat_p = pts.reshape(-1, 3)
    flat_v = vvals.reshape(-1, 3)
    flat_dv = vdivs.reshape(-1)
    flat_w = weights.reshape(-1)
    ik = 1j * k
    step = max(1, 2_000_000 // max(1, len(flat_p)))
    for s in range(0, len(points), step):
        x = points[s : s + step]
        d = x[:, None, :] - flat_p[None, :, :]
        r = np.linalg.norm(d, axis=2)
        G = np.exp(ik * r) * (INV4PI / r) * flat_w
        gfac = G * (ik - 1.0 / r) / r
        out_E[s : s + step] = ik * (G @ flat_v) - (1.0 / ik) * np.einsum(
            "pn,pnc->pc", gfac * flat_dv, d
        )
        out_H[s : s + step] = np.einsum("pnc->pc", gfac[:, :, None] * np.cross(d, flat_v[None, :, :]))
