"""Independent reference for gain, diameter, factored diameter and c(M).

Reads a model file written by `fmdp envs --env NAME --dump-model FILE`,
expands the factored tables with numpy, and solves everything with plain
dense value iteration.

usage: python3 model_oracle.py MODEL.json
"""
import itertools
import json
import math
import sys

import numpy as np


def decode(code, radices):
    out = []
    for r in radices:
        out.append(code % r)
        code //= r
    return out


def encode(values, radices):
    code, stride = 0, 1
    for v, r in zip(values, radices):
        code += v * stride
        stride *= r
    return code


def flatten(m):
    ss, aa = m["state_factor_sizes"], m["action_factor_sizes"]
    radices = ss + aa
    S, A = math.prod(ss), math.prod(aa)
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    for s in range(S):
        for a in range(A):
            x = decode(s, ss) + decode(a, aa)
            q = np.ones(1)
            for i, z in enumerate(m["transition_scopes"]):
                row = encode([x[j] for j in z], [radices[j] for j in z])
                # least significant factor first: factor i varies fastest after earlier ones
                q = np.kron(np.asarray(m["transition_tables"][i][row]), q)
            P[s, a] = q
            for i, z in enumerate(m["reward_scopes"]):
                row = encode([x[j] for j in z], [radices[j] for j in z])
                R[s, a] += m["reward_means"][i][row]
    return P, R


def gain(P, R, tol=1e-12, max_iter=10**7):
    u = np.zeros(P.shape[0])
    for _ in range(max_iter):
        nxt = (R + P @ u).max(axis=1)
        d = nxt - u
        u = nxt - nxt.min()
        if d.max() - d.min() <= tol:
            return 0.5 * (d.max() + d.min())
    raise RuntimeError("gain: no convergence")


def hitting(P, target, tol=1e-12, max_iter=10**7):
    S = P.shape[0]
    h = np.zeros(S)
    Pm = P.copy()
    Pm[:, :, target] = 0.0
    for _ in range(max_iter):
        nxt = 1.0 + (Pm @ h).min(axis=1)
        nxt[target] = 0.0
        if np.abs(nxt - h).max() <= tol:
            return nxt
        h = nxt
    raise RuntimeError("hitting: no convergence")


def main(path):
    m = json.load(open(path))
    ss, aa = m["state_factor_sizes"], m["action_factor_sizes"]
    radices = ss + aa
    nstate = len(ss)
    P, R = flatten(m)
    S, A = R.shape
    g = gain(P, R)
    H = np.zeros((S, S))  # H[from, to]
    for t in range(S):
        H[:, t] = hitting(P, t)
    D = H.max()
    print(f"gain = {g:.17g}")
    print(f"diameter = {D:.17g}")

    states = [decode(s, ss) for s in range(S)]
    factored = []
    for i, z in enumerate(m["transition_scopes"]):
        zs = [j for j in z if j < nstate]
        za = [j for j in z if j >= nstate]
        table = m["transition_tables"][i]
        di = []
        for y in itertools.product(*[range(radices[j]) for j in reversed(zs)]):
            y = list(reversed(y))
            # union over actions of the supports of factor i
            support = set()
            for av in itertools.product(*[range(radices[j]) for j in za]):
                vals = dict(zip(zs, y))
                vals.update(zip(za, av))
                row = encode([vals[j] for j in z], [radices[j] for j in z])
                support |= {k for k, p in enumerate(table[row]) if p > 0}
            members = [s for s in range(S) if states[s][i] in support]
            di.append(H[np.ix_(members, members)].max())
        factored.append(di)
    print("factored =", json.dumps([[float(f"{v:.17g}") for v in di] for di in factored]))

    ell = len(m["reward_scopes"])
    inner = 0.0
    for i, z in enumerate(m["transition_scopes"]):
        zs = [j for j in z if j < nstate]
        nsv = math.prod(radices[j] for j in zs)
        for x, row in enumerate(m["transition_tables"][i]):
            k = sum(1 for p in row if p > 0)
            inner += factored[i][x % nsv] ** 2 * (k - 1)
    rsum = sum(math.sqrt(math.prod(radices[j] for j in z)) for z in m["reward_scopes"])
    print(f"c_m = {ell * math.sqrt(inner) + rsum + D:.17g}")


if __name__ == "__main__":
    main(sys.argv[1])
