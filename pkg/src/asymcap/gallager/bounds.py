from dataclasses import dataclass

import numpy as np

from asymcap.dmc import Dmc, InputDist, mutual_information, check_dimensions
from asymcap.helpers import h2

# slack for floating point noise on equality cases
BOUND_SLACK = 1e-12


@dataclass
class PerturbationBounds:
    delta: float
    actual_gap: float
    bound_y: float
    bound_x: float

    @property
    def bound(self) -> float:
        return min(self.bound_y, self.bound_x)


def mi_perturbation_bounds(ch: Dmc, p_star: InputDist, p: InputDist) -> PerturbationBounds:
    """
    Compares |I(p*) - I(p)| with 3δ·log2|Y| + h2(δ) and 7δ·log2|X| + h2(δ) + h2(4δ), δ the total variation
    distance. Raises AssertionError if the gap exceeds the smaller bound.
    """
    check_dimensions(ch, p_star)
    check_dimensions(ch, p)
    delta = p_star.tv_distance(p)
    if delta >= 0.125:
        raise ValueError(f'Total variation distance must be below 1/8, got {delta}')

    gap = abs(mutual_information(ch, p_star) - mutual_information(ch, p))
    bound_y = 3 * delta * np.log2(ch.output_size) + h2(delta)
    bound_x = 7 * delta * np.log2(ch.input_size) + h2(delta) + h2(4 * delta)
    result = PerturbationBounds(delta=delta, actual_gap=gap, bound_y=float(bound_y), bound_x=float(bound_x))
    if gap > result.bound + BOUND_SLACK:
        raise AssertionError(f'Mutual information gap {gap} exceeds the perturbation bound {result.bound}')
    return result


def entropy_diff_bound(p: InputDist, q: InputDist):
    """(|H(p) - H(q)|, δ·log2(|X| - 1) + h2(δ)); raises AssertionError if the first exceeds the second."""
    delta = p.tv_distance(q)
    if delta > 0.5 + BOUND_SLACK:
        raise ValueError(f'Total variation distance must not exceed 1/2, got {delta}')
    actual = abs(p.entropy() - q.entropy())
    bound = delta * np.log2(max(p.size - 1, 1)) + h2(min(delta, 0.5))
    if actual > bound + BOUND_SLACK:
        raise AssertionError(f'Entropy difference {actual} exceeds {bound}')
    return actual, float(bound)
