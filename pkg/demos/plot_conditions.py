"""
How much does a support estimate relax the recovery condition?
==============================================================

The weighted program puts weight omega on an estimated support and weight
1 elsewhere. When the estimate is good, the restricted isometry bound that
guarantees stable recovery gets weaker. Here we tabulate that bound for a
few estimate accuracies.
"""
import numpy as np

from weightedcs import delta_hat, GuaranteeInputs, evaluate

a = 3.0
rho = 1.0   # estimate has the same size as the true support

# alpha is the fraction of the estimate that is correct
for alpha in (0.3, 0.5, 0.7, 0.9):
    row = [delta_hat(a, omega, rho, alpha) for omega in (0.0, 0.5, 1.0)]
    print(f"alpha={alpha:.1f}  " + "  ".join(f"{v:.3f}" for v in row))

# omega = 1 is plain l1: the bound does not depend on alpha there.

###############################################################################
# Error constants for one concrete setting

g = GuaranteeInputs(a=a, k=40, rho=rho, alpha=0.7, omega=0.3,
                    delta_ak=0.1, delta_a1k=0.1)
res = evaluate(g)
print("condition holds:", res.condition_holds)
print("C0' = %.3f   C1' = %.3f" % (res.C0p, res.C1p))
