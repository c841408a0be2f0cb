"""Quartile cut points of z = 1..100 at midpoints between order statistics
k = l n / L and k + 1, and the resulting bin masses."""
import numpy as np

z = np.arange(1, 101, dtype=float)
L = 4
s = np.sort(z)
cuts = [0.5 * (s[l * len(s) // L - 1] + s[l * len(s) // L]) for l in range(1, L)]
mass = np.histogram(z, bins=[-np.inf] + cuts + [np.inf])[0] / len(z)
print([float(c) for c in cuts], [float(m) for m in mass])
