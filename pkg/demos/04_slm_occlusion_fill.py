"""Stochastic latent modulation on a position-encoded latent.

Encoding each cell's flat index as its value makes the source of every
filled cell visible: after modulation, occluded cells carry the index of
the visible cell they were copied from, and the content latent and the
inverted-noise latent always copy from the same place.
"""

import numpy as np

from latentdolly import BinaryMask, LatentTensor, ModulationInputs, Rng, modulate

f, h, w = 2, 4, 6
dims = (1, f, 3, h, w)
pos = np.broadcast_to(
    np.arange(f * h * w, dtype=np.float64).reshape(1, f, 1, h, w), dims
).copy()

m = np.zeros(dims, dtype=np.uint8)
m[0, :, :, :, 4:] = 1          # right edge is occluded (disocclusion band)
d = np.zeros(dims, dtype=np.uint8)
d[0, :, :, :, :2] = 1          # only the left columns are eligible sources

inputs = ModulationInputs(LatentTensor(pos), LatentTensor(pos * 100.0),
                          BinaryMask(m), BinaryMask(d))
x_m, e_m = modulate(inputs, Rng(42).split("slm"))

print("frame 0, channel 0 after modulation (values are source indices):")
print(x_m.data[0, 0, 0].astype(int))
print("\ncontent and noise latents share every source index:",
      np.array_equal(x_m.data * 100.0, e_m.data))
print("visible region untouched:",
      np.array_equal(x_m.data[m == 0], pos[m == 0]))

x_m2, _ = modulate(inputs, Rng(42).split("slm"))
print("same seed, same fill:", np.array_equal(x_m.data, x_m2.data))
