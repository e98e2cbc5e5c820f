#!/usr/bin/env python3
"""Solve an SDPA sparse problem with cvxopt and write a CSDP-style solution.

usage: sdpa_cvxopt.py problem.dat-s solution.sol

Exit status mirrors CSDP: 0 solved, 1 the dual matrix problem is
infeasible, 2 the problem in x is infeasible, 3 partial success,
4 or more on failure.
"""

import re
import sys

from cvxopt import matrix, solvers, spmatrix


def read_sdpa(path):
    with open(path) as fh:
        lines = [l for l in fh if not l.startswith(('"', '*'))]
    toks = re.split(r"[\s,{}()]+", " ".join(lines).strip())
    pos = 0

    def take():
        nonlocal pos
        pos += 1
        return toks[pos - 1]

    m = int(take())
    nb = int(take())
    sizes = [int(take()) for _ in range(nb)]
    c = [float(take()) for _ in range(m)]
    entries = []
    while pos < len(toks):
        mat, blk, i, j = (int(take()) for _ in range(4))
        entries.append((mat, blk - 1, i - 1, j - 1, float(take())))
    return m, sizes, c, entries


def main(argv):
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 4
    m, sizes, c, entries = read_sdpa(argv[1])

    # Diagonal blocks become linear rows, the rest semidefinite blocks.
    lin_off, sdp_off = {}, {}
    nl = 0
    for b, s in enumerate(sizes):
        if s < 0:
            lin_off[b] = nl
            nl += -s
    sdp_sizes = []
    for b, s in enumerate(sizes):
        if s > 0:
            sdp_off[b] = len(sdp_sizes)
            sdp_sizes.append(s)

    # sum_i x_i F_i - F_0 = s >= 0 becomes G x + s = h with G = -F_i, h = -F_0.
    gl_v, gl_i, gl_j = [], [], []
    hl = [0.0] * nl
    gs = [([], [], []) for _ in sdp_sizes]
    hs = [matrix(0.0, (s, s)) for s in sdp_sizes]
    for mat, b, i, j, v in entries:
        if b in lin_off:
            if i != j:
                continue
            row = lin_off[b] + i
            if mat == 0:
                hl[row] -= v
            else:
                gl_v.append(-v)
                gl_i.append(row)
                gl_j.append(mat - 1)
        else:
            k = sdp_off[b]
            s = sdp_sizes[k]
            cells = {(i, j), (j, i)}
            for (r, col) in cells:
                if mat == 0:
                    hs[k][r, col] -= v
                else:
                    gv, gi, gj = gs[k]
                    gv.append(-v)
                    gi.append(col * s + r)
                    gj.append(mat - 1)

    cvec = matrix(c, (m, 1))
    Gl = spmatrix(gl_v, gl_i, gl_j, (nl, m)) if nl else None
    Gs = [spmatrix(v, i, j, (s * s, m)) for (v, i, j), s in zip(gs, sdp_sizes)]

    solvers.options.update(
        {"show_progress": False, "abstol": 1e-9, "reltol": 1e-9, "feastol": 1e-9, "maxiters": 200}
    )
    kwargs = {}
    if nl:
        kwargs = {"Gl": Gl, "hl": matrix(hl, (nl, 1))}
    if Gs:
        kwargs.update({"Gs": Gs, "hs": hs})
    try:
        sol = solvers.sdp(cvec, **kwargs)
    except (ValueError, ArithmeticError) as err:
        print("cvxopt failed:", err, file=sys.stderr)
        return 9

    status = sol["status"]
    print("status:", status)
    if status == "primal infeasible":
        return 2
    if status == "dual infeasible":
        return 1
    x = sol["x"]
    if x is None:
        return 9

    with open(argv[2], "w") as out:
        out.write(" ".join("%.17e" % x[k] for k in range(m)) + "\n")
        for b, s in enumerate(sizes):
            if b in lin_off:
                z = sol["zl"]
                for i in range(-s):
                    out.write("2 %d %d %d %.17e\n" % (b + 1, i + 1, i + 1, z[lin_off[b] + i]))
            else:
                z = sol["zs"][sdp_off[b]]
                for i in range(s):
                    for j in range(i, s):
                        # cvxopt keeps the lower triangle.
                        out.write("2 %d %d %d %.17e\n" % (b + 1, i + 1, j + 1, z[j, i]))
    print("primal objective: %.12f" % -sol["primal objective"])
    return 0 if status == "optimal" else 3


if __name__ == "__main__":
    sys.exit(main(sys.argv))
