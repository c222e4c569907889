import numpy as np

from latentdolly import Rng, gaussian


def gtensor(dims, label="x", seed=0, dtype=np.float64):
    return gaussian(dims, Rng(seed).split(label), dtype=dtype)
