import numpy as np

from asymcap.helpers import is_power_of_two


def polar_transform(u) -> np.ndarray:
    """
    Computes u·G_n over GF(2) with G_n the m-fold Kronecker power of [[1, 0], [1, 1]] (no bit reversal), along the
    last axis, so a batch of vectors can be transformed at once. G_n is its own inverse.
    """
    v = np.array(u, dtype=np.uint8, copy=True)
    if v.ndim == 0:
        raise ValueError('Polar transform needs at least one dimension')
    n = v.shape[-1]
    if not is_power_of_two(n):
        raise ValueError(f'Block length must be a power of two, got {n}')
    if np.any(v > 1):
        raise ValueError('Polar transform input must be a bit vector')

    step = 1
    while step < n:
        butterfly = v.reshape(v.shape[:-1] + (n // (2 * step), 2, step))
        butterfly[..., 0, :] ^= butterfly[..., 1, :]
        step *= 2
    return v
