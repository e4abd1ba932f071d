"""
Sum-product belief propagation with syndrome-constrained checks: a check c with target bit s_c sends
(1 - 2·s_c) times the usual tanh-rule message, so BP searches for words with P·x = s instead of codewords. Work is
batched over independent blocks along the first axis.
"""
from dataclasses import dataclass
from typing import Optional, List, Callable, Tuple

import numpy as np

from asymcap.dmc import Dmc
from asymcap.helpers import SparseSettings, sparse_settings_non_nil
from asymcap.polar.successive_cancellation import prior_llr
from asymcap.sparse.graph import SparseGraph, syndrome

# smallest magnitude fed to phi, phi(PHI_FLOOR) is about 28.3
PHI_FLOOR = 1e-12


def phi(x: np.ndarray) -> np.ndarray:
    """-ln tanh(x/2), its own inverse on (0, inf); phi(inf) = 0."""
    with np.errstate(divide='ignore'):
        return -np.log(np.tanh(np.maximum(x, PHI_FLOOR) / 2.0))


@dataclass
class BPResult:
    x: np.ndarray
    satisfied: np.ndarray
    iterations: int


class BeliefPropagation:
    """
    Flooding-schedule BP state. Variables can be fixed (decimated) between iterations; a fixed variable sends an
    infinite LLR with the sign of its value from then on.
    """

    def __init__(self, g: SparseGraph, llrs: np.ndarray, target: np.ndarray, saturation: float):
        self.g = g
        self.llrs = np.clip(np.atleast_2d(np.asarray(llrs, dtype=float)), -saturation, saturation)
        self.batch = self.llrs.shape[0]
        if self.llrs.shape[1] != g.n:
            raise ValueError(f'Expected {g.n} variable LLRs, got {self.llrs.shape[1]}')
        target = np.broadcast_to(np.atleast_2d(np.asarray(target, dtype=np.uint8)), (self.batch, g.m))
        self.target = target
        self.check_sign = 1.0 - 2.0 * target.astype(float)
        self.saturation = saturation
        self.c2v = np.zeros((self.batch, g.num_edges))
        self.v2c = np.zeros((self.batch, g.num_edges))
        self.fixed = np.zeros((self.batch, g.n), dtype=bool)
        self.values = np.zeros((self.batch, g.n), dtype=np.uint8)
        self.iterations = 0

    def totals(self) -> np.ndarray:
        """Posterior LLR of every variable: prior plus all incoming check messages."""
        return self.llrs + (self.g.var_incidence.T @ self.c2v.T).T

    def step(self):
        g = self.g
        totals = self.totals()
        v2c = np.clip(totals[:, g.edge_var] - self.c2v, -self.saturation, self.saturation)
        fixed_edges = self.fixed[:, g.edge_var]
        if fixed_edges.any():
            pinned = np.where(self.values[:, g.edge_var] == 0, np.inf, -np.inf)
            v2c = np.where(fixed_edges, pinned, v2c)
        self.v2c = v2c

        # -0.0 counts as negative
        signs = np.copysign(1.0, v2c)
        magnitudes = phi(np.abs(v2c))
        # dummy slot: sign +1, phi(inf) = 0
        padded_signs = np.concatenate([signs, np.ones((self.batch, 1))], axis=1)[:, g.check_edges]
        padded_magnitudes = np.concatenate([magnitudes, np.zeros((self.batch, 1))], axis=1)[:, g.check_edges]
        check_sign = padded_signs.prod(axis=2) * self.check_sign
        check_sum = padded_magnitudes.sum(axis=2)

        others = np.maximum(check_sum[:, g.edge_check] - magnitudes, 0.0)
        c2v = check_sign[:, g.edge_check] * signs * phi(others)
        self.c2v = np.clip(c2v, -self.saturation, self.saturation)
        self.iterations += 1

    def decide(self) -> np.ndarray:
        x = (self.totals() < 0).astype(np.uint8)
        return np.where(self.fixed, self.values, x)

    def fix(self, batch_index: int, variables: np.ndarray, values: np.ndarray):
        if np.any(self.fixed[batch_index, variables]):
            raise ValueError('A decimated variable cannot be fixed again')
        self.fixed[batch_index, variables] = True
        self.values[batch_index, variables] = values


def belief_propagation(
        g: SparseGraph,
        llrs: np.ndarray,
        target: np.ndarray,
        iterations: int,
        saturation: float,
        hook: Optional[Callable[[BeliefPropagation], None]] = None) -> BPResult:
    """
    Runs up to ``iterations`` flooding iterations. A block whose hard decision meets the target syndrome keeps that
    decision even if later iterations would change it; the run stops once every block has done so.
    """
    state = BeliefPropagation(g, llrs, target, saturation)
    x = state.decide()
    satisfied = np.zeros(state.batch, dtype=bool)
    for _ in range(iterations):
        state.step()
        if hook is not None:
            hook(state)
        decision = state.decide()
        newly = ~satisfied & np.all(syndrome(g, decision) == state.target, axis=1)
        x[~satisfied] = decision[~satisfied]
        satisfied |= newly
        if satisfied.all():
            break
    return BPResult(x=x, satisfied=satisfied, iterations=state.iterations)


def channel_llrs(ch: Dmc, alpha: float, y: np.ndarray) -> np.ndarray:
    """Posterior LLRs ln P(x=0|y)/P(x=1|y) per received column index under a Bernoulli(alpha) input."""
    return ch.llr_table()[np.asarray(y, dtype=int)] + prior_llr(alpha)


def bp_decode_biased(
        g: SparseGraph,
        ch: Dmc,
        alpha: float,
        y: np.ndarray,
        target_syndrome: np.ndarray,
        settings: Optional[SparseSettings] = None) -> BPResult:
    """Estimates a Bernoulli(alpha) word from its channel output and the value of its syndrome."""
    settings = sparse_settings_non_nil(settings)
    single = np.asarray(y).ndim == 1
    result = belief_propagation(g, channel_llrs(ch, alpha, np.atleast_2d(y)), target_syndrome,
                                settings.iterations, settings.saturation)
    if single:
        return BPResult(x=result.x[0], satisfied=result.satisfied[0], iterations=result.iterations)
    return result


def bsc_llr(crossover: float) -> float:
    return float(np.log1p(-crossover) - np.log(crossover))


def task_messages(g: SparseGraph, y: np.ndarray, crossover: float, iterations: int,
                  saturation: float) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """
    Check-to-variable message arrays per iteration of the two decoding tasks on y = c ⊕ e over a BSC: decoding c
    from y with the zero syndrome, and decoding e from syndrome(y) with the noise prior. The channel-decoding
    messages are returned multiplied by (1 - 2·y) at their variable, which makes the two traces identical.
    """
    y = np.asarray(y, dtype=np.uint8)
    flip = (1.0 - 2.0 * y.astype(float))
    base = bsc_llr(crossover)
    channel_trace, syndrome_trace = [], []

    def record(trace):
        return lambda state: trace.append(state.c2v[0].copy())

    channel_state = BeliefPropagation(g, flip * base, np.zeros(g.m, dtype=np.uint8), saturation)
    syndrome_state = BeliefPropagation(g, np.full(g.n, base), syndrome(g, y), saturation)
    hooks = (record(channel_trace), record(syndrome_trace))
    for _ in range(iterations):
        for state, hook in zip((channel_state, syndrome_state), hooks):
            state.step()
            hook(state)
    edge_flip = flip[g.edge_var]
    return [messages * edge_flip for messages in channel_trace], syndrome_trace


def task_equivalence_check(g: SparseGraph, c: np.ndarray, e: np.ndarray, crossover: float,
                           settings: Optional[SparseSettings] = None) -> bool:
    """
    Decodes the codeword from y = c ⊕ e and, separately, the noise from syndrome(y). True iff both succeed with
    ĉ = y ⊕ ê or both fail.
    """
    settings = sparse_settings_non_nil(settings)
    c = np.asarray(c, dtype=np.uint8)
    e = np.asarray(e, dtype=np.uint8)
    if np.any(syndrome(g, c)):
        raise ValueError('c is not a codeword of the graph')
    y = c ^ e
    base = bsc_llr(crossover)

    channel = belief_propagation(g, (1.0 - 2.0 * y) * base, np.zeros(g.m, dtype=np.uint8),
                                 settings.iterations, settings.saturation)
    noise = belief_propagation(g, np.full(g.n, base), syndrome(g, y), settings.iterations, settings.saturation)
    c_hat, e_hat = channel.x[0], noise.x[0]
    if channel.satisfied[0] != noise.satisfied[0]:
        return False
    if not channel.satisfied[0]:
        return True
    return bool(np.array_equal(c_hat, y ^ e_hat))
