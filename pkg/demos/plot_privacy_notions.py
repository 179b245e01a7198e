"""
What local privacy and k-anonymity say about re-identification
==============================================================

Both notions cap how often a single observation gives a user away, but
neither is necessary for low risk. This script checks a randomized-response
mechanism against its guarantees and then builds a family of matrices that
satisfy neither notion while their best-guess accuracy still falls as 2/n.
"""

import math

import numpy as np

from reid_risk import (
    RepresentationMatrix,
    check_k_anonymity,
    check_ldp,
    construct_ldp_kanon_counterexample,
    fano_bound,
    kanon_accuracy_bound,
    ldp_accuracy_bound,
    max_accuracy_bound,
)

# %%
# Randomized response over m values: keep the true value with probability
# 1 - p, otherwise report a uniform value.
n = m = 20
p = 0.6
P = np.full((n, m), p / m)
np.fill_diagonal(P, 1 - p + p / m)
P = RepresentationMatrix(P)

eps = math.log((1 - p + p / m) / (p / m))
print(f"pure privacy level eps={eps:.3f}, delta needed={check_ldp(P, eps):.2e}")
print(f"best guess {max_accuracy_bound(P):.4f} <= privacy bound {ldp_accuracy_bound(eps, 0.0, n, m).value:.4f}")

# A smaller eps is still achievable with some delta.
for e in (0.5, 1.0, 2.0):
    d = check_ldp(P, e)
    print(f"  eps={e:.1f}: delta*={d:.4f}, bound={ldp_accuracy_bound(e, d, n, m).value:.4f}")

# %%
# k-anonymity: 12 users in groups of three that share a one-hot token.
groups = np.repeat(np.arange(4), 3)
K = np.zeros((12, 4))
K[np.arange(12), groups] = 1.0
K = RepresentationMatrix(K)
k = check_k_anonymity(K)
print(f"k={k}: best guess {max_accuracy_bound(K):.4f} <= {kanon_accuracy_bound(k):.4f}")

# %%
# Neighbouring users overlap on a sliding window of two tokens. No finite
# privacy level holds (delta is always 1) and tokens are not one-hot, yet
# the best guess is exactly 2/n.
for n in (3, 10, 100):
    C = construct_ldp_kanon_counterexample(n)
    print(f"n={n:>3}: delta*(eps=5)={check_ldp(C, 5.0):.0f}, k={check_k_anonymity(C)}, "
          f"best guess={max_accuracy_bound(C):.4f}, 2/n={2 / n:.4f}")

# %%
# An information-theoretic cap for comparison: with one nat of mutual
# information between identity and observation the bound shrinks only as
# 1 / log n.
for n in (10, 1000, 10**6):
    print(f"n={n:>7}: Fano cap with 1 nat = {fano_bound(1.0, n):.3f}")
