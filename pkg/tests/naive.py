"""Plain double-loop reference implementations of the affinity formulas."""

import math


def doctor_model(y_row, S, visited_only=False):
    K = len(S)
    out = []
    for j in range(K):
        num = 0.0
        den = 0.0
        for k in range(K):
            num += y_row[k] * S[j][k]
            if not visited_only or y_row[k] > 0:
                den += S[j][k]
        out.append(num / den if den > 0 else 0.0)
    return out


def neighbour_model(i, Y, S):
    N, K = len(Y), len(Y[0])
    den = sum(S[i][u] for u in range(N) if u != i)
    out = []
    for j in range(K):
        num = 0.0
        for u in range(N):
            if u != i:
                num += S[i][u] * Y[u][j]
        out.append(num / den if den > 0 else 0.0)
    return out


def cosine(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0 or nv == 0:
        return 0.0
    return dot / (nu * nv)


def benchmark_model(i, Y, F):
    N = len(F)
    S = [[max(cosine(F[a], F[b]), 0.0) for b in range(N)] for a in range(N)]
    return neighbour_model(i, Y, S)
