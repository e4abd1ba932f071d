"""
Discrete L-densities of binary-input channels and the symmetrisation identities that let a symmetric-channel
analysis carry over to asymmetric channels. LLRs are natural logarithms of P(bit 0)/P(bit 1) (bit 0 is the +1
symbol), functionals are in bits.
"""
import json
from dataclasses import dataclass
from typing import Tuple, Sequence

import numpy as np

from asymcap.dmc import Dmc, InputDist, check_binary, check_dimensions
from asymcap.helpers import ATOM_TOLERANCE, SYMMETRY_TOLERANCE, PROBABILITY_TOLERANCE, AsymmetricDensityError

PRIOR = 'prior'
POSTERIOR = 'posterior'


@dataclass(frozen=True)
class DiscreteLDensity:
    """Finitely supported LLR distribution with atoms sorted by value and equal values merged."""

    llrs: np.ndarray
    masses: np.ndarray
    tag: str = PRIOR

    def __init__(self, llrs: Sequence[float], masses: Sequence[float], tag: str = PRIOR):
        if tag not in (PRIOR, POSTERIOR):
            raise ValueError(f'Unknown L-density tag {tag}')
        llrs, masses = merge_atoms(np.asarray(llrs, dtype=float), np.asarray(masses, dtype=float))
        if np.any(masses < 0):
            raise ValueError('Atom masses must be nonnegative')
        total = masses.sum()
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f'Atom masses must sum to 1, got {total}')
        llrs.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, 'llrs', llrs)
        object.__setattr__(self, 'masses', masses)
        object.__setattr__(self, 'tag', tag)

    @property
    def atoms(self) -> list:
        return list(zip(self.llrs.tolist(), self.masses.tolist()))

    def mass_at(self, llr: float) -> float:
        if np.isinf(llr):
            hits = self.llrs == llr
        else:
            hits = np.abs(self.llrs - llr) <= ATOM_TOLERANCE
        return float(self.masses[hits].sum())

    def flip(self) -> 'DiscreteLDensity':
        """The density of -L."""
        return DiscreteLDensity(-self.llrs, self.masses, self.tag)

    def to_dict(self) -> dict:
        # JSON has no infinity literal, so the two infinite atoms are spelled out
        def encode(value: float):
            if np.isinf(value):
                return '+inf' if value > 0 else '-inf'
            return float(value)

        return {'tag': self.tag, 'atoms': [[encode(llr), mass] for llr, mass in self.atoms]}

    def to_json_string(self) -> str:
        return json.dumps(self.to_dict())


def merge_atoms(llrs: np.ndarray, masses: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sorts atoms, merges values closer than the atom tolerance and drops zero-mass atoms."""
    if llrs.shape != masses.shape:
        raise ValueError('LLR and mass arrays must have the same shape')
    keep = masses > 0
    llrs, masses = llrs[keep], masses[keep]
    order = np.argsort(llrs, kind='stable')
    llrs, masses = llrs[order], masses[order]

    merged_llrs, merged_masses = [], []
    for llr, mass in zip(llrs, masses):
        if merged_llrs and (llr == merged_llrs[-1] or
                            (np.isfinite(llr) and abs(llr - merged_llrs[-1]) <= ATOM_TOLERANCE)):
            merged_masses[-1] += mass
        else:
            merged_llrs.append(llr)
            merged_masses.append(mass)
    return np.array(merged_llrs, dtype=float), np.array(merged_masses, dtype=float)


def mixture(densities: Sequence[DiscreteLDensity], weights: Sequence[float], tag: str) -> DiscreteLDensity:
    llrs = np.concatenate([d.llrs for d in densities])
    masses = np.concatenate([w * d.masses for d, w in zip(densities, weights)])
    return DiscreteLDensity(llrs, masses, tag)


def prior_ldensities(ch: Dmc) -> Tuple[DiscreteLDensity, DiscreteLDensity]:
    """Densities of L(Y) = ln W(y|+1)/W(y|-1) given X = +1 (bit 0) and given X = -1 (bit 1)."""
    check_binary(ch)
    llr = ch.llr_table()
    aplus = DiscreteLDensity(llr, ch.w[0], PRIOR)
    aminus = DiscreteLDensity(llr, ch.w[1], PRIOR)
    return aplus, aminus


def symmetrize_prior(aplus: DiscreteLDensity, aminus: DiscreteLDensity) -> DiscreteLDensity:
    """a^s(y) = (a^-(-y) + a^+(y)) / 2."""
    return mixture([aminus.flip(), aplus], [0.5, 0.5], PRIOR)


def check_symmetry(d: DiscreteLDensity, tol: float = SYMMETRY_TOLERANCE) -> bool:
    """True iff every atom (y, m) is matched by mass m·e^{-y} at -y."""
    for llr, mass in zip(d.llrs, d.masses):
        with np.errstate(over='ignore'):
            expected = mass * np.exp(-llr)
        if not np.isfinite(expected):
            return False
        if abs(d.mass_at(-llr) - expected) > tol:
            return False
    return True


def check_reexpression(plus: DiscreteLDensity, minus: DiscreteLDensity,
                       plus_weight: float = 1.0, minus_weight: float = 1.0,
                       tol: float = SYMMETRY_TOLERANCE) -> bool:
    """
    Checks plus_weight·a^+(y) = e^y·minus_weight·a^-(y) atom by atom, the relation between the two conditional
    densities of one channel (weights 1 for prior densities, ᾱ and α for posterior ones).
    """
    values = np.union1d(plus.llrs, minus.llrs)
    for llr in values:
        left = plus_weight * plus.mass_at(llr)
        right_mass = minus_weight * minus.mass_at(llr)
        if np.isposinf(llr):
            # minus has no mass at +inf, plus may have any
            if right_mass > tol:
                return False
            continue
        if np.isneginf(llr):
            if left > tol:
                return False
            continue
        if abs(left - np.exp(llr) * right_mass) > tol:
            return False
    return True


def _require_symmetric(d: DiscreteLDensity):
    if not check_symmetry(d, SYMMETRY_TOLERANCE):
        raise AsymmetricDensityError('L-density is not symmetric')


def _log2_one_plus_exp_minus(llrs: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, -llrs) / np.log(2)


def capacity_functional(d: DiscreteLDensity) -> float:
    """Σ m·(1 - log2(1 + e^{-y})): the capacity of the symmetric channel with L-density d."""
    _require_symmetric(d)
    return float(np.sum(d.masses * (1.0 - _log2_one_plus_exp_minus(d.llrs))))


def entropy_functional(d: DiscreteLDensity) -> float:
    """Σ m·log2(1 + e^{-y}); the complement of ``capacity_functional``."""
    return float(np.sum(d.masses * _log2_one_plus_exp_minus(d.llrs)))


def _check_nondegenerate(p: InputDist):
    if np.any(p.p <= 0.0) or np.any(p.p >= 1.0):
        raise ValueError(f'Prior must put mass strictly between 0 and 1 on both symbols, got {p.p}')


def posterior_ldensities(ch: Dmc, p: InputDist) -> Tuple[DiscreteLDensity, DiscreteLDensity]:
    """
    Densities of L_p(Y) = ln p(+1|y)/p(-1|y) given each transmitted value, with alpha = p(bit 1) the prior
    probability of -1; every prior atom moves by ln(ᾱ/α).
    """
    check_binary(ch)
    check_dimensions(ch, p)
    _check_nondegenerate(p)
    shift = np.log(p.p[0]) - np.log(p.p[1])
    llr = ch.llr_table() + shift
    apnplus = DiscreteLDensity(llr, ch.w[0], POSTERIOR)
    apminus = DiscreteLDensity(llr, ch.w[1], POSTERIOR)
    return apnplus, apminus


def symmetrize_posterior(apnplus: DiscreteLDensity, apminus: DiscreteLDensity, p: InputDist) -> DiscreteLDensity:
    """a_p^s(y) = α·a_p^-(-y) + ᾱ·a_p^+(y)."""
    if p.size != 2:
        raise ValueError(f'Binary prior required, got {p.size} symbols')
    _check_nondegenerate(p)
    alpha_bar, alpha = float(p.p[0]), float(p.p[1])
    if not check_reexpression(apnplus, apminus, alpha_bar, alpha, tol=1e-9):
        raise ValueError('Prior does not match the one the posterior densities were computed with')
    return mixture([apminus.flip(), apnplus], [alpha, alpha_bar], POSTERIOR)


def conditional_entropy_functional(d: DiscreteLDensity) -> float:
    """H(X|Y) of the channel whose symmetrised posterior L-density is d."""
    if d.tag != POSTERIOR:
        raise ValueError('Conditional entropy functional needs a posterior L-density')
    _require_symmetric(d)
    return entropy_functional(d)
