"""Tour of the distance kernels: metric, non-metric, and fast variants."""
import math
import time

import numpy as np

from simsearch import create_space

rng = np.random.default_rng(0)

print("== Minkowski family ==")
for descr in ("l1", "l2", "linf", "lp:p=0.5"):
    space = create_space(descr)
    x = space.make_payload([3.0, 4.0])
    y = space.make_payload([0.0, 0.0])
    print(f"  {descr:10s} d((3,4),(0,0)) = {space._distance(x, y):.4f}")

print("\n== Cosine vs angular ==")
cos = create_space("cosinesimil")
ang = create_space("angulardist")
x, y = cos.make_payload([1.0, 0.0]), cos.make_payload([0.0, 1.0])
print(f"  cosine(orthogonal)  = {cos._distance(x, y):.4f}")
print(f"  angular(orthogonal) = {ang._distance(ang.make_payload([1, 0]), ang.make_payload([0, 1])):.4f}"
      f"  (pi/2 = {math.pi / 2:.4f})")

print("\n== Jensen-Shannon: slow vs table-approximated ==")
slow = create_space("jsdivslow", "double")
approx = create_space("jsdivfastapprox", "double")
pairs = []
for _ in range(2000):
    a = rng.uniform(0.01, 1, size=64)
    b = rng.uniform(0.01, 1, size=64)
    pairs.append((a / a.sum(), b / b.sum()))

t0 = time.perf_counter()
s_vals = [slow._distance(slow.make_payload(a), slow.make_payload(b)) for a, b in pairs]
t_slow = time.perf_counter() - t0
payloads = [(approx.make_payload(a), approx.make_payload(b)) for a, b in pairs]
t0 = time.perf_counter()
a_vals = [approx._distance(pa, pb) for pa, pb in payloads]
t_approx = time.perf_counter() - t0
rel = [abs(a - s) / s for a, s in zip(a_vals, s_vals) if s > 0]
print(f"  slow: {t_slow:.3f}s   approx (precomputed logs): {t_approx:.3f}s")
print(f"  mean relative error {np.mean(rel):.2e}, max {np.max(rel):.2e}")

print("\n== Bregman divergences are asymmetric ==")
kl = create_space("kldivgenfast", "double")
a = kl.make_payload([0.7, 0.2, 0.1])
b = kl.make_payload([0.2, 0.4, 0.4])
print(f"  gen-KL(a, b) = {kl._distance(a, b):.4f}")
print(f"  gen-KL(b, a) = {kl._distance(b, a):.4f}")

print("\n== Strings and bits ==")
lev = create_space("leven", "int")
print(f"  leven(kitten, sitting) = {lev._distance('kitten', 'sitting')}")
bits = create_space("bit_hamming", "int")
u = bits.make_payload([1, 0, 1, 1, 0])
v = bits.make_payload([1, 0, 0, 1, 1])
print(f"  hamming(10110, 10011)  = {bits._distance(u, v)}")
