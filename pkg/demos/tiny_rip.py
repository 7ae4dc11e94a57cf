"""
Exact restricted isometry constants of a small matrix
=====================================================

For tiny matrices every column subset can be checked, so delta_k is exact.
"""
import numpy as np

from weightedcs import empirical_rip_delta

rng = np.random.default_rng(0)
n, N = 12, 16
G = rng.standard_normal((n, N)) / np.sqrt(n)
for k in (1, 2, 3, 4):
    print(k, round(empirical_rip_delta(G, k), 4))

# Orthonormal rows, rescaled so columns have unit norm on average
Q, _ = np.linalg.qr(rng.standard_normal((N, n)))
B = np.sqrt(N / n) * Q.T
for k in (1, 2, 3, 4):
    print(k, round(empirical_rip_delta(B, k), 4))
