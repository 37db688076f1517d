#!/usr/bin/env python3
"""Generate the two-determinant H2/STO-6G Hamiltonian table (data/h2_sto6g.csv).

Only s-type Gaussians are involved, so the one- and two-electron integrals
have closed forms. The sigma_g / sigma_u orbitals are fixed by symmetry, so
no SCF is needed. Output columns: R (angstrom), h00, h11, h01, enuc (hartree).
"""
import math
import sys

import numpy as np

ANGSTROM_TO_BOHR = 1.0 / 0.52917721092
ZETA = 1.24
ALPHA = np.array([23.10303149, 4.235915534, 1.185056519,
                  0.4070988982, 0.1580884151, 0.06510953954]) * ZETA ** 2
COEF = np.array([0.009163596281, 0.04936149294, 0.1685383049,
                 0.3705627997, 0.4164915298, 0.1303340841])
NORM = COEF * (2.0 * ALPHA / math.pi) ** 0.75


def boys0(t):
    if t < 1e-12:
        return 1.0 - t / 3.0
    return 0.5 * math.sqrt(math.pi / t) * math.erf(math.sqrt(t))


def prim_s(a, b, ra, rb):
    p = a + b
    return (math.pi / p) ** 1.5 * math.exp(-a * b / p * (ra - rb) ** 2)


def prim_t(a, b, ra, rb):
    p = a + b
    mu = a * b / p
    d2 = (ra - rb) ** 2
    return mu * (3.0 - 2.0 * mu * d2) * prim_s(a, b, ra, rb)


def prim_v(a, b, ra, rb, rc):
    p = a + b
    rp = (a * ra + b * rb) / p
    return -2.0 * math.pi / p * math.exp(-a * b / p * (ra - rb) ** 2) * boys0(p * (rp - rc) ** 2)


def prim_eri(a, b, c, d, ra, rb, rc, rd):
    p, q = a + b, c + d
    rp = (a * ra + b * rb) / p
    rq = (c * rc + d * rd) / q
    pre = 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))
    return pre * math.exp(-a * b / p * (ra - rb) ** 2 - c * d / q * (rc - rd) ** 2) \
        * boys0(p * q / (p + q) * (rp - rq) ** 2)


def contract(fn, centers):
    total = 0.0
    for idx in np.ndindex(*(len(ALPHA),) * len(centers)):
        w = np.prod([NORM[i] for i in idx])
        total += w * fn(*[ALPHA[i] for i in idx], *centers)
    return total


def two_level(r_bohr):
    pos = [0.0, r_bohr]
    n = 2
    s = np.zeros((n, n))
    h = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s[i, j] = contract(prim_s, (pos[i], pos[j]))
            t = contract(prim_t, (pos[i], pos[j]))
            v = sum(contract(lambda a, b, ra, rb: prim_v(a, b, ra, rb, rc), (pos[i], pos[j]))
                    for rc in pos)
            h[i, j] = t + v
    eri = np.zeros((n,) * 4)
    for i, j, k, l in np.ndindex(n, n, n, n):
        eri[i, j, k, l] = contract(prim_eri, (pos[i], pos[j], pos[k], pos[l]))
    ovl = s[0, 1]
    c = np.array([[1.0, 1.0], [1.0, -1.0]])
    c[:, 0] /= math.sqrt(2.0 * (1.0 + ovl))
    c[:, 1] /= math.sqrt(2.0 * (1.0 - ovl))
    hmo = c.T @ h @ c
    g = np.einsum("pqrs,pi,qj,rk,sl->ijkl", eri, c, c, c, c)
    h00 = 2.0 * hmo[0, 0] + g[0, 0, 0, 0]
    h11 = 2.0 * hmo[1, 1] + g[1, 1, 1, 1]
    h01 = g[0, 1, 0, 1]
    return h00, h11, h01, 1.0 / r_bohr


def grid():
    pts = []
    r = 0.40
    while r < 3.0 - 1e-9:
        pts.append(round(r, 2))
        r += 0.05
    r = 3.0
    while r <= 6.0 + 1e-9:
        pts.append(round(r, 2))
        r += 0.25
    return pts


def main(out):
    with open(out, "w") as f:
        f.write("R,h00,h11,h01,enuc\n")
        for r in grid():
            h00, h11, h01, enuc = two_level(r * ANGSTROM_TO_BOHR)
            f.write(f"{r:.2f},{h00:.12f},{h11:.12f},{h01:.12f},{enuc:.12f}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/h2_sto6g.csv")
