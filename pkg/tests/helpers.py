"""Shared construction of random test instances."""

from types import SimpleNamespace

import numpy as np

from risbeam.channel_model import spectral_decompose
from risbeam.ese_metrics import ActiveBeam, PassiveBeam


def complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_user_correlation(n, rng, beta=None, rank=None):
    """Random Hermitian PSD correlation with optional rank and trace scale."""
    cols = rank if rank is not None else n
    x = complex_gaussian(rng, (n, cols))
    r = x @ x.conj().T / cols
    if beta is not None:
        r *= beta * n / r.trace().real
    return spectral_decompose(r, rank_tol=1e-12)


def random_instance(m, n, k, rng, power=1.0, noise_var=1e-2, rank=None):
    """Random channel + beams + users for oracle comparisons."""
    h = complex_gaussian(rng, (m, n))
    users = [random_user_correlation(n, rng, rank=rank) for _ in range(k)]
    w = complex_gaussian(rng, (m, k))
    w *= np.sqrt(power) / np.linalg.norm(w)
    ab = ActiveBeam(w=w, power_budget=power)
    pb = PassiveBeam.from_phases(rng.uniform(0, 2 * np.pi, n))
    return SimpleNamespace(h=h, users=users, ab=ab, pb=pb,
                           noise_var=noise_var, power=power)
