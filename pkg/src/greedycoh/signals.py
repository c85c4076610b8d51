"""Finite linear combinations of atoms and the coefficient-side checks.

A :class:`SparseRepresentation` is the coefficient map ``index -> c`` of a
signal ``f = sum c_i g_i``. Along a pure greedy run the same map is updated
one coefficient at a time (:func:`pga_coefficient_step`) so that it keeps
synthesising the current residual exactly; the descent and inner-product
bounds are then checked on these coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .dictionary import Dictionary, check_index, _atomic_write
from .errors import (
    BadExponent,
    DictionaryMismatch,
    EmptyRepresentation,
    HypothesisViolated,
    IndexOutOfRange,
    SparsityTooLarge,
)


@dataclass(frozen=True)
class SparseRepresentation:
    """Immutable map from atom index to a nonzero coefficient.

    ``dictionary_label`` binds the map to a dictionary; ``None`` leaves it
    unbound so it can be used with any dictionary of sufficient size.
    """

    entries: Mapping[int, float]
    dictionary_label: str | None = None

    def __post_init__(self):
        clean = {}
        for k, v in sorted(dict(self.entries).items()):
            if int(k) != k or k < 0:
                raise ValueError(f"invalid atom index {k!r}")
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"non-finite coefficient at index {k}")
            if v != 0.0:
                clean[int(k)] = v
        object.__setattr__(self, "entries", MappingProxyType(clean))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, index):
        return self.entries[index]

    def get(self, index, default=0.0):
        return self.entries.get(index, default)

    def __eq__(self, other):
        if not isinstance(other, SparseRepresentation):
            return NotImplemented
        return (
            dict(self.entries) == dict(other.entries)
            and self.dictionary_label == other.dictionary_label
        )

    def __hash__(self):
        return hash((tuple(self.entries.items()), self.dictionary_label))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self.entries)

    def coefficients(self) -> np.ndarray:
        return np.fromiter(self.entries.values(), dtype=np.float64, count=len(self))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coefficients()))) if self.entries else 0.0

    def power_sum(self, p: float) -> float:
        """Sum of ``|c|**p`` over the stored coefficients."""
        return float(np.sum(np.abs(self.coefficients()) ** p))

    def one_norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients())))

    def _label_with(self, other: SparseRepresentation) -> str | None:
        a, b = self.dictionary_label, other.dictionary_label
        if a is not None and b is not None and a != b:
            raise DictionaryMismatch(f"cannot combine representations over {a!r} and {b!r}")
        return a if a is not None else b

    def __add__(self, other: SparseRepresentation) -> SparseRepresentation:
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0.0) + v
        return SparseRepresentation(out, self._label_with(other))

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other: SparseRepresentation) -> SparseRepresentation:
        return self + (-other)

    def scaled(self, a: float) -> SparseRepresentation:
        return SparseRepresentation(
            {k: a * v for k, v in self.entries.items()}, self.dictionary_label
        )

    def __mul__(self, a):
        return self.scaled(float(a))

    __rmul__ = __mul__

    def with_label(self, label: str | None) -> SparseRepresentation:
        return SparseRepresentation(self.entries, label)

    def to_dense(self, count: int) -> np.ndarray:
        x = np.zeros(count)
        for k, v in self.entries.items():
            x[k] = v
        return x


def _bind(D: Dictionary, rep: SparseRepresentation) -> None:
    if rep.dictionary_label is not None and rep.dictionary_label != D.label:
        raise DictionaryMismatch(
            f"representation bound to {rep.dictionary_label!r}, dictionary is {D.label!r}"
        )
    for k in rep.entries:
        check_index(D, k)


def synthesize(D: Dictionary, rep: SparseRepresentation) -> np.ndarray:
    """Return ``sum_k rep[k] * g_k`` as a length-``dim`` vector."""
    _bind(D, rep)
    if not rep.entries:
        return np.zeros(D.dim)
    return D.atoms[:, list(rep.entries)] @ rep.coefficients()


def _check_p(p: float) -> float:
    p = float(p)
    if not 1.0 <= p < 2.0:
        raise BadExponent(f"p must satisfy 1 <= p < 2, got {p!r}")
    return p


def rep_quasi_norm(rep: SparseRepresentation, p: float) -> float:
    """``(sum |c|^p)^(1/p)``; an upper bound on the class quasi-norm of the signal."""
    p = _check_p(p)
    if not rep.entries:
        return 0.0
    return rep.power_sum(p) ** (1.0 / p)


def gen_sparse_signal(
    D: Dictionary,
    sparsity: int,
    amp_low: float = 1.0,
    amp_high: float = 2.0,
    seed: int = 0,
) -> SparseRepresentation:
    """Random ``sparsity``-term representation over ``D``.

    The support is uniform without replacement, magnitudes are uniform on
    ``[amp_low, amp_high]`` and signs are fair coin flips.
    """
    if int(sparsity) != sparsity or sparsity < 1:
        raise ValueError(f"sparsity must be a positive integer, got {sparsity!r}")
    if sparsity > D.count:
        raise SparsityTooLarge(f"sparsity {sparsity} exceeds dictionary size {D.count}")
    if not 0 < amp_low <= amp_high:
        raise ValueError("need 0 < amp_low <= amp_high")
    rng = np.random.default_rng(seed)
    support = np.sort(rng.choice(D.count, size=int(sparsity), replace=False))
    mags = rng.uniform(amp_low, amp_high, size=support.size)
    signs = rng.choice(np.array([-1.0, 1.0]), size=support.size)
    return SparseRepresentation(
        {int(k): float(s * a) for k, s, a in zip(support, signs, mags)}, D.label
    )


def pga_coefficient_step(
    rep: SparseRepresentation, selected: int, inner_product: float, D: Dictionary | None = None
) -> SparseRepresentation:
    """Coefficient update matching one pure greedy step.

    Only the selected coefficient changes, to ``c[selected] - inner_product``;
    a selection outside the support adds the entry ``-inner_product``.
    """
    if D is not None:
        check_index(D, selected)
    elif int(selected) != selected or selected < 0:
        raise IndexOutOfRange(f"invalid atom index {selected!r}")
    out = dict(rep.entries)
    out[int(selected)] = out.get(int(selected), 0.0) - float(inner_product)
    return SparseRepresentation(out, rep.dictionary_label)


@dataclass(frozen=True)
class LemmaReport:
    holds: bool
    lhs: float
    rhs: float
    slack_used: float
    detail: str = ""

    def as_text(self) -> str:
        return "\n".join(
            [
                f"holds={self.holds}",
                f"lhs={self.lhs!r}",
                f"rhs={self.rhs!r}",
                f"slack_used={self.slack_used!r}",
                f"detail={self.detail}",
            ]
        )


def check_lemma2(
    D: Dictionary, rep: SparseRepresentation, lambda0: int, epsilon: float = 0.0
) -> LemmaReport:
    """Inner product of an exactly synthesised signal against one atom.

    For ``lambda0`` in the support the deviation ``|<f, g> - c|`` is bounded,
    otherwise ``|<f, g>|`` itself; the bound is ``mu1 * max|c| + epsilon``.
    """
    if not rep.entries:
        raise EmptyRepresentation("check_lemma2 needs a non-empty representation")
    lambda0 = check_index(D, lambda0)
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    f = synthesize(D, rep)
    ip = float(D.atoms[:, lambda0] @ f)
    inside = lambda0 in rep.entries
    lhs = abs(ip - rep.entries[lambda0]) if inside else abs(ip)
    cmax = rep.max_abs()
    rhs = D.coherence.mu1 * cmax + epsilon
    slack = 1e-12 * (1.0 + cmax)
    where = "in support" if inside else "outside support"
    return LemmaReport(lhs <= rhs + slack, lhs, rhs, slack, f"lambda0={lambda0} {where}")


def check_lemma3_descent(
    rep_before: SparseRepresentation,
    rep_after: SparseRepresentation,
    p: float,
    mu1: float,
) -> LemmaReport:
    """Power-sum descent of the tracked coefficients across one pure greedy step.

    ``holds`` refers to ``sum|c_after|^p <= sum|c_before|^p - 2^-p (1-3 mu1)^p max|c_before|^p``.
    The detail line also records whether the max coefficient did not grow
    and whether the support grew, which means the step left the regime the
    bound is stated for.
    """
    p = _check_p(p)
    if mu1 >= 1.0 / 3.0:
        raise HypothesisViolated(f"descent bound needs mu1 < 1/3, got {mu1!r}")
    if mu1 < 0:
        raise ValueError("mu1 must be nonnegative")
    rep_before._label_with(rep_after)
    before = rep_before.power_sum(p)
    cmax = rep_before.max_abs()
    lhs = rep_after.power_sum(p)
    rhs = before - 2.0 ** (-p) * (1.0 - 3.0 * mu1) ** p * cmax**p
    slack = 1e-12 * (1.0 + before)
    max_ok = rep_after.max_abs() <= cmax + 1e-12 * (1.0 + cmax)
    grew = not set(rep_after.entries) <= set(rep_before.entries)
    detail = f"max_nonincreasing={max_ok} support_grew={grew}"
    return LemmaReport(lhs <= rhs + slack, lhs, rhs, slack, detail)


def save_representation(rep: SparseRepresentation, path) -> None:
    text = "".join(f"{k} {format(v, '.17g')}\n" for k, v in rep.entries.items())
    _atomic_write(path, text)


def load_representation(path, dictionary_label: str | None = None) -> SparseRepresentation:
    entries = {}
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                break
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{n}: expected 'index coefficient'")
            k = int(parts[0])
            if k in entries:
                raise ValueError(f"{path}:{n}: duplicate index {k}")
            entries[k] = float(parts[1])
    return SparseRepresentation(entries, dictionary_label)
