"""Independent reference implementations used by several test modules."""
import math

import numpy as np


def oracle_solve(env, delta, phase, amp0, T, lam, N):
    """Dense solve assembled element by element from the linearized equation.

    Rows: nu_0 = 0, nu_1 = -h Omega0(0), then for each interior t_i
    lam (nu_{i+1} - 2 nu_i + nu_{i-1}) / h^2 + S_i[qbar nu - (1/T) sum_j w_j Q_ij nu_j]
      = -(lam (phi_{i+1} - 2 phi_i + phi_{i-1}) / h^2 + S_i[Z])
    with S_i the [1, 2, 1]/4 average over i-1, i, i+1.
    """
    h = T / (N - 1)
    t = [k * h for k in range(N)]
    w = [h] * N
    w[0] = w[-1] = h / 2
    Q = [[env(abs(t[a] - t[b])) * math.cos(phase[a] - phase[b] + delta * (t[a] - t[b]))
          for b in range(N)] for a in range(N)]
    Zs = [sum(w[b] * env(abs(t[a] - t[b])) * math.sin(phase[a] - phase[b] + delta * (t[a] - t[b]))
              for b in range(N)) / T for a in range(N)]
    op = [[0.0] * N for _ in range(N)]
    for a in range(N):
        qbar = sum(w[b] * Q[a][b] for b in range(N)) / T
        for b in range(N):
            op[a][b] = -w[b] * Q[a][b] / T
        op[a][a] += qbar
    A = np.zeros((N, N))
    rhs = np.zeros(N)
    A[0, 0] = 1.0
    A[1, 1] = 1.0
    rhs[1] = -h * amp0
    for i in range(1, N - 1):
        row = i + 1
        A[row, i - 1] += lam / h ** 2
        A[row, i] -= 2 * lam / h ** 2
        A[row, i + 1] += lam / h ** 2
        for k, s in ((i - 1, 0.25), (i, 0.5), (i + 1, 0.25)):
            for b in range(N):
                A[row, b] += s * op[k][b]
        d2 = (phase[i + 1] - 2 * phase[i] + phase[i - 1]) / h ** 2
        rhs[row] = -(lam * d2 + 0.25 * Zs[i - 1] + 0.5 * Zs[i] + 0.25 * Zs[i + 1])
    return np.linalg.solve(A, rhs)
