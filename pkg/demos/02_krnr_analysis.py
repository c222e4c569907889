"""K-order recursive noise: coefficient growth, similarity trend, and
the norm-deviation sweet spot.

The recursion eps^(k) = sqrt(a) x0 + sqrt(1-a) eps^(k-1) has closed-form
weights (c_x0, c_eps). As k grows, c_x0 climbs toward sqrt(a)/(1-sqrt(1-a))
while c_eps decays geometrically, so eps^(k) tilts toward the clean
latent; the adaptive variant pulls the statistics back to a shallow
reference recursion.
"""

import numpy as np

from latentdolly import (
    Rng,
    adaptive_krnr,
    cosine,
    default_schedule,
    gaussian,
    krnr_closed_discrete,
    krnr_coefficients,
    norm_deviation,
    stats,
    strength_to_index,
)

sched = default_schedule()
alpha = sched.alpha_bar(strength_to_index(0.95, sched.T))
print(f"alpha_bar at strength 0.95: {alpha:.6g}")
print(f"limit of c_x0: {krnr_coefficients(alpha, 1).limit_x0:.4f}\n")

dims = (1, 2, 16, 30, 45)
x0 = gaussian(dims, Rng(0).split("x0"), dtype=np.float64)
eps = gaussian(dims, Rng(0).split("eps"), dtype=np.float64)

print(" k    c_x0     c_eps    cos(eps^k, x0)  mean     var      |norm - sqrt(d)|")
for k in (1, 2, 3, 5, 10, 20, 50):
    c = krnr_coefficients(alpha, k)
    t = krnr_closed_discrete(x0, eps, alpha, k)
    s = stats(t)
    print(f"{k:3d}  {c.c_x0:7.4f}  {c.c_eps:7.5f}  {cosine(t, x0):13.4f}"
          f"  {s.mean:7.4f}  {s.variance:7.4f}  {norm_deviation(t):10.2f}")

adaptive = adaptive_krnr(x0, eps, alpha, k=10, delta=3)
shallow = krnr_closed_discrete(x0, eps, alpha, 3)
print("\nadaptive (k=10, delta=3) variance:", f"{stats(adaptive).variance:.4f}",
      "vs plain k=10:", f"{stats(krnr_closed_discrete(x0, eps, alpha, 10)).variance:.4f}",
      "vs delta=3 reference:", f"{stats(shallow).variance:.4f}")
