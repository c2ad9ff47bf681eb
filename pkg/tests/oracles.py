"""Independent reference computations used as test oracles.

These enumerate the generative process with exact rational arithmetic and
compute information quantities with plain loops, sharing no code with the
package.
"""
from fractions import Fraction
import math


def brute_joint_shared_flag(d, p):
    """P(label, color) for a d-state confounder whose state is the label and a
    color that copies it when the shared follow flag fires, else is uniform."""
    p = Fraction(p).limit_denominator(10**6)
    table = [[Fraction(0)] * d for _ in range(d)]
    for c in range(d):
        pc = Fraction(1, d)
        table[c][c] += pc * p
        for v in range(d):
            table[c][v] += pc * (1 - p) * Fraction(1, d)
    return table


def mi_loops(table):
    """Mutual information in nats of a nested-list joint."""
    rows = [sum(r) for r in table]
    cols = [sum(table[i][j] for i in range(len(table))) for j in range(len(table[0]))]
    total = 0.0
    for i, r in enumerate(table):
        for j, pij in enumerate(r):
            if pij > 0:
                total += float(pij) * math.log(float(pij) / (float(rows[i]) * float(cols[j])))
    return total


def kl_loops(p, q):
    return sum(float(a) * math.log(float(a) / float(b)) for a, b in zip(p, q) if a > 0)
