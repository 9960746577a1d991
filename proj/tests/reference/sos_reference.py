"""Reference solves of the heuristic-synthesis SOS programs with cvxpy.

Used once to derive frozen expected values for the C++ test suite. Not part of
the build; run manually: python3 tests/reference/sos_reference.py
"""
import itertools
import math
import sys

import cvxpy as cp
import numpy as np


def monomials(nvars, deg):
    out = []
    for d in range(deg + 1):
        for e in itertools.product(range(d + 1), repeat=nvars):
            if sum(e) == d:
                out.append(e)
    return out


def add(a, b, s=1.0):
    r = dict(a)
    for k, v in b.items():
        r[k] = r.get(k, 0) + s * v
    return r


def mul(a, b):
    r = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            r[k] = r.get(k, 0) + va * vb
    return r


def synth(nx, nu, f, box_x, box_u, deg_h, deg_lam, measure_moment, goal):
    n = nx + nu
    hb = [m + (0,) * nu for m in monomials(nx, deg_h)]
    c = cp.Variable(len(hb))
    H = {m: c[i] for i, m in enumerate(hb)}
    expr = {(0,) * n: 1.0}
    for i in range(nx):
        for m, ci in H.items():
            if m[i] == 0:
                continue
            dm = list(m)
            dm[i] -= 1
            for fm, fv in f[i].items():
                k = tuple(a + b for a, b in zip(dm, fm))
                expr[k] = expr.get(k, 0) + m[i] * fv * ci
    cons = []
    for j, (lo, hi) in enumerate(box_x + box_u):
        e = [0] * n
        e[j] = 1
        e2 = [0] * n
        e2[j] = 2
        h = {(0,) * n: -lo * hi, tuple(e): lo + hi, tuple(e2): -1.0}
        basis = [tuple(d if k == j else 0 for k in range(n)) for d in range(deg_lam // 2 + 1)]
        Q = cp.Variable((len(basis), len(basis)), PSD=True)
        cons.append(Q >> 0)
        for a in range(len(basis)):
            for b in range(len(basis)):
                m = tuple(x + y for x, y in zip(basis[a], basis[b]))
                for hm, hv in h.items():
                    k = tuple(x + y for x, y in zip(m, hm))
                    expr[k] = expr.get(k, 0) - hv * Q[a, b]
    dexp = max(sum(k) for k in expr)
    dexp += dexp % 2
    mb = monomials(n, dexp // 2)
    G = cp.Variable((len(mb), len(mb)), PSD=True)
    gram = {}
    for a in range(len(mb)):
        for b in range(len(mb)):
            k = tuple(x + y for x, y in zip(mb[a], mb[b]))
            gram.setdefault(k, []).append(G[a, b])
    for k in set(gram) | set(expr):
        lhs = sum(gram.get(k, [])) if k in gram else 0
        cons.append(lhs == expr.get(k, 0))
    val = 0
    for i, m in enumerate(hb):
        val += c[i] * np.prod([g ** e for g, e in zip(goal, m[:nx])])
    cons.append(val == 0)
    obj = sum(c[i] * measure_moment(m[:nx]) for i, m in enumerate(hb))
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob, hb, c


def box_moment(lo, hi):
    def mom(m):
        return np.prod([(h ** (a + 1) - l ** (a + 1)) / (a + 1) for l, h, a in zip(lo, hi, m)])
    return mom


def main():
    # Multiplier degree follows the library default: the largest even degree
    # keeping lambda*h within the AH2 expression degree (here d - 2).
    print("single integrator, boundary measure")
    for d in (2, 4, 6, 8, 10):
        prob, hb, c = synth(1, 1, [{(0, 1): 1.0}], [(-1, 1)], [(-1, 1)], d, max(d - 2, 0), lambda m: 1 + (-1) ** m[0], [0])
        cv = c.value
        print(d, prob.status, prob.value, "H(1)=", sum(cv[i] * 1 for i in range(len(hb))),
              "H(-1)=", sum(cv[i] * (-1) ** hb[i][0] for i in range(len(hb))))
        xs = np.linspace(-1, 1, 1001)
        Hs = sum(cv[i] * xs ** hb[i][0] for i in range(len(hb)))
        print("   max(H-|x|)", np.max(Hs - np.abs(xs)))
    print("double integrator")
    f = [{(0, 1, 0): 1.0}, {(0, 0, 1): 1.0}]
    r2 = math.sqrt(2)
    for sup in ((-2, 2, -r2, r2), (-3, 3, -3, 3)):
        for d in (2, 4, 8, 12):
            prob, hb, c = synth(2, 1, f, [(-3, 3), (-3, 3)], [(-1, 1)], d, max(d - 2, 0),
                                box_moment([sup[0], sup[2]], [sup[1], sup[3]]), [0, 0])
            print(sup, d, prob.status, prob.value)


if __name__ == "__main__":
    main()
