from dataclasses import dataclass
from typing import Optional

import numpy as np
from tqdm import tqdm

from asymcap.helpers import SparseSettings, Generators, sparse_settings_non_nil, block_generators
from asymcap.polar.successive_cancellation import prior_llr
from asymcap.sparse.bp import BeliefPropagation
from asymcap.sparse.graph import SparseGraph, syndrome


@dataclass
class DecimationResult:
    x: np.ndarray
    unfulfilled: np.ndarray
    rounds: int
    checks: int

    @property
    def unfulfilled_fraction(self) -> np.ndarray:
        return self.unfulfilled / max(self.checks, 1)

    @property
    def ones_fraction(self) -> np.ndarray:
        return self.x.mean(axis=-1)


def bp_decimate_encode(
        g: SparseGraph,
        target_syndrome: np.ndarray,
        alpha: float,
        rng: Generators,
        settings: Optional[SparseSettings] = None,
        progress: bool = False) -> DecimationResult:
    """
    Looks for a word of bias about alpha with syndrome ``target_syndrome`` by alternating BP iterations with
    decimation: every round fixes the most confident undecided variables to their likelier values (random value on
    a zero LLR, random order among equal magnitudes) until all are fixed. The number of violated checks is reported,
    not repaired. ``rng`` is either shared by all blocks or a sequence with one generator per block.
    """
    settings = sparse_settings_non_nil(settings)
    target = np.asarray(target_syndrome, dtype=np.uint8)
    single = target.ndim == 1
    target = np.atleast_2d(target)
    if target.shape[1] != g.m:
        raise ValueError(f'Expected {g.m} syndrome bits, got {target.shape[1]}')
    batch = target.shape[0]
    rngs = block_generators(rng, batch)

    state = BeliefPropagation(g, np.full((batch, g.n), prior_llr(alpha)), target, settings.saturation)
    remaining = g.n
    rounds = 0
    with tqdm(total=g.n, desc='Decimating', disable=not progress) as bar:
        while remaining > 0:
            for _ in range(settings.decimation_iterations):
                state.step()
            count = min(remaining, max(1, int(np.ceil(settings.decimation_fraction * remaining))))
            totals = state.totals()
            for b in range(batch):
                undecided = np.flatnonzero(~state.fixed[b])
                confidence = np.abs(totals[b, undecided])
                order = np.lexsort((rngs[b].random(undecided.size), -confidence))[:count]
                chosen = undecided[order]
                values = (totals[b, chosen] < 0).astype(np.uint8)
                ties = totals[b, chosen] == 0
                values[ties] = rngs[b].integers(0, 2, size=int(ties.sum()), dtype=np.uint8)
                state.fix(b, chosen, values)
            remaining -= count
            rounds += 1
            bar.update(count)

    x = state.values.copy()
    unfulfilled = (syndrome(g, x) != target).sum(axis=1)
    if single:
        return DecimationResult(x=x[0], unfulfilled=unfulfilled[0], rounds=rounds, checks=g.m)
    return DecimationResult(x=x, unfulfilled=unfulfilled, rounds=rounds, checks=g.m)
