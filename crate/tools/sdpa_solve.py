#!/usr/bin/env python3
"""Solve a sparse SDPA problem and write a CSDP-style solution file.

    sdpa_solve.py IN OUT [--solver CLARABEL|SCS|CVXOPT]

Problem: maximise tr(C X) subject to tr(A_i X) = b_i, X psd (block
diagonal; negative block sizes are diagonal blocks). The solution file has
the dual vector y on its first line followed by `2 block i j value` lines
for the primal X. Exit status 0 on an optimal or near-optimal answer, 1
otherwise.
"""

import argparse
import sys

import cvxpy as cp
import numpy as np
import pandas as pd
import scipy.sparse as sp


def read_sdpa(path):
    header = []
    consumed = 0
    with open(path) as f:
        for line in f:
            consumed += 1
            if line.strip() and line.lstrip()[0] not in '"*':
                header.append(line)
                if len(header) == 4:
                    break
    clean = lambda s: s.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " ")
    m = int(header[0].split()[0])
    nblocks = int(header[1].split()[0])
    sizes = [int(t) for t in clean(header[2]).split()][:nblocks]
    b = np.array([float(t) for t in clean(header[3]).split()][:m])
    entries = pd.read_csv(
        path,
        sep=r"\s+",
        header=None,
        skiprows=consumed,
        names=["mat", "blk", "i", "j", "v"],
        dtype={"mat": np.int64, "blk": np.int64, "i": np.int64, "j": np.int64, "v": np.float64},
        engine="c",
    )
    return m, sizes, b, entries


def build(m, sizes, b, entries):
    mat = entries["mat"].to_numpy()
    blk = entries["blk"].to_numpy() - 1
    ii = entries["i"].to_numpy() - 1
    jj = entries["j"].to_numpy() - 1
    vv = entries["v"].to_numpy()
    lhs = 0
    variables = []
    for k, n in enumerate(sizes):
        sel = blk == k
        r, i, j, d = mat[sel], ii[sel], jj[sel], vv[sel]
        if n > 0:
            x = cp.Variable((n, n), PSD=True)
            off = i != j
            rows = np.concatenate([r, r[off]])
            cols = np.concatenate([i + j * n, j[off] + i[off] * n])
            vals = np.concatenate([d, d[off]])
            flat, width = cp.vec(x, order="F"), n * n
        else:
            x = cp.Variable(-n, nonneg=True)
            rows, cols, vals = r, i, d
            flat, width = x, -n
        variables.append(x)
        M = sp.csr_matrix((vals, (rows, cols)), shape=(m + 1, width))
        lhs = lhs + M @ flat
    objective = cp.Maximize(lhs[0])
    equality = lhs[1:] == b
    return cp.Problem(objective, [equality]), variables, equality


def write_solution(path, sizes, variables, equality):
    y = equality.dual_value
    if y is None:
        y = np.zeros(equality.shape)
    with open(path, "w") as out:
        out.write(" ".join(f"{v:.17e}" for v in np.atleast_1d(y)) + "\n")
        for blk, (n, x) in enumerate(zip(sizes, variables), start=1):
            val = x.value
            if n > 0:
                val = (val + val.T) / 2
                for i in range(n):
                    for j in range(i, n):
                        if val[i, j] != 0.0:
                            out.write(f"2 {blk} {i + 1} {j + 1} {val[i, j]:.17e}\n")
            else:
                for i in range(-n):
                    if val[i] != 0.0:
                        out.write(f"2 {blk} {i + 1} {i + 1} {val[i]:.17e}\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("input")
    ap.add_argument("output")
    ap.add_argument("--solver", default="CLARABEL")
    args = ap.parse_args()
    m, sizes, b, entries = read_sdpa(args.input)
    problem, variables, equality = build(m, sizes, b, entries)
    kwargs = {}
    if args.solver == "CLARABEL":
        kwargs = dict(tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10, max_iter=400)
    try:
        problem.solve(solver=args.solver, **kwargs)
    except cp.error.SolverError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return 1
    print(f"status {problem.status} objective {problem.value}")
    if problem.status not in ("optimal", "optimal_inaccurate"):
        return 1
    write_solution(args.output, sizes, variables, equality)
    return 0


if __name__ == "__main__":
    sys.exit(main())
