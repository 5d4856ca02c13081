#!/usr/bin/env python3
"""Cross-check a channel profile CSV (y,u,tau,phase) with a finite-difference
solve of the 1-D regularized problem

    -(k |u'|^{p-2} u' + a u' / sqrt(u'^2 + delta^2))' = f,   u(0) = u(H) = 0,

for one fluid across the whole channel (k = mu 2^{-p/2}, a = g / sqrt 2).
Newton with continuation in delta; prints the max deviation and exits 1 when
it exceeds --tol.
"""

import argparse
import sys

import numpy as np
import pandas as pd
from scipy.sparse import diags
from scipy.sparse.linalg import spsolve


def flux(s, k, a, p, delta):
    r = np.sqrt(s * s + delta * delta)
    tau = k * np.abs(s) ** (p - 1) * np.sign(s) + a * s / r
    dtau = k * (p - 1) * np.abs(s) ** (p - 2) if p != 2 else np.full_like(s, k)
    return tau, dtau + a * delta * delta / r ** 3


def solve(n, height, k, a, p, f, deltas):
    h = height / n
    u = np.zeros(n + 1)
    for delta in deltas:
        for _ in range(200):
            s = np.diff(u) / h
            tau, dtau = flux(s, k, a, p, delta)
            res = -(tau[1:] - tau[:-1]) / h - f
            w = dtau / (h * h)
            jac = diags([-w[:-1][1:], w[:-1] + w[1:], -w[1:][:-1]], [-1, 0, 1], format="csc")
            step = spsolve(jac, -res)
            t = 1.0
            norm0 = np.linalg.norm(res)
            while t > 1e-6:
                trial = u.copy()
                trial[1:-1] += t * step
                st = np.diff(trial) / h
                taut, _ = flux(st, k, a, p, delta)
                if np.linalg.norm(-(taut[1:] - taut[:-1]) / h - f) < norm0 or t < 1e-3:
                    break
                t *= 0.5
            u = trial
            if np.max(np.abs(t * step)) < 1e-15:
                break
    return np.linspace(0.0, height, n + 1), u


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("profile")
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--g", type=float, default=0.1)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--f", type=float, default=1.0)
    ap.add_argument("--cells", type=int, default=20000)
    ap.add_argument("--tol", type=float, default=1e-6)
    args = ap.parse_args()

    ref = pd.read_csv(args.profile)
    height = float(ref["y"].iloc[-1])
    k = args.mu * 2.0 ** (-args.p / 2.0)
    a = args.g / np.sqrt(2.0)
    deltas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9]
    y, u = solve(args.cells, height, k, a, args.p, args.f, deltas)
    dev = np.max(np.abs(np.interp(ref["y"], y, u) - ref["u"]))
    print(f"max |u_fd - u_profile| = {dev:.3e} over {len(ref)} samples ({args.cells} cells)")
    return 0 if dev <= args.tol else 1


if __name__ == "__main__":
    sys.exit(main())
