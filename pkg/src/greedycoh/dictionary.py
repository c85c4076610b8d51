"""Finite dictionaries of unit-norm atoms and their cumulative coherence.

A dictionary is stored as a ``dim x K`` matrix whose columns are the atoms.
Atom indices ``0..K-1`` follow column order and never change.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .errors import (
    DuplicateAtom,
    IndexOutOfRange,
    NormViolation,
    TargetUnreachable,
    ZeroAtom,
)

if TYPE_CHECKING:
    from .signals import SparseRepresentation

UNIT_TOL = 1e-10
NORMALIZABLE_TOL = 1e-6
DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class CoherenceReport:
    mu1: float
    mu: float
    lower_frame: float
    upper_frame: float
    worst_atom: int

    def as_text(self) -> str:
        return "\n".join(
            [
                f"mu1={self.mu1!r}",
                f"mu={self.mu!r}",
                f"lower_frame={self.lower_frame!r}",
                f"upper_frame={self.upper_frame!r}",
                f"worst_atom={self.worst_atom}",
            ]
        )


class FrameCheck(NamedTuple):
    lhs: float
    mid: float
    rhs: float
    holds: bool


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Immutable collection of unit-norm atoms stored column-wise.

    Construct through :func:`new_dictionary` when the input may need
    renormalisation; the constructor itself only accepts atoms that are
    already unit norm to within ``UNIT_TOL``.
    """

    atoms: np.ndarray
    label: str = ""

    def __post_init__(self):
        a = np.array(self.atoms, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"atoms must be a non-empty 2-d array, got shape {a.shape}")
        norms = np.linalg.norm(a, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
        if bad.size:
            raise NormViolation(
                f"atom {bad[0]} has norm {norms[bad[0]]!r}; expected 1 within {UNIT_TOL}"
            )
        _check_duplicates(a)
        a.setflags(write=False)
        object.__setattr__(self, "atoms", a)

    @property
    def dim(self) -> int:
        return self.atoms.shape[0]

    @property
    def count(self) -> int:
        return self.atoms.shape[1]

    def __len__(self):
        return self.count

    def atom(self, index: int) -> np.ndarray:
        check_index(self, index)
        return self.atoms[:, index]

    @cached_property
    def gram(self) -> np.ndarray:
        g = self.atoms.T @ self.atoms
        g.setflags(write=False)
        return g

    @cached_property
    def coherence(self) -> CoherenceReport:
        return _coherence_from_gram(self.gram)

    def __repr__(self):
        return f"Dictionary(label={self.label!r}, dim={self.dim}, count={self.count})"


def check_index(D: Dictionary, index) -> int:
    i = int(index)
    if i != index or not 0 <= i < D.count:
        raise IndexOutOfRange(f"atom index {index!r} outside 0..{D.count - 1}")
    return i


def _check_duplicates(a: np.ndarray) -> None:
    # Candidate pairs come from the Gram matrix; the 1e-12 test is applied to
    # the vectors themselves because 1 - |<g, h>| cannot resolve it.
    g = np.abs(a.T @ a)
    np.fill_diagonal(g, 0.0)
    rows, cols = np.nonzero(np.triu(g > 1.0 - 1e-6))
    for i, j in zip(rows, cols):
        diff = min(
            np.max(np.abs(a[:, i] - a[:, j])),
            np.max(np.abs(a[:, i] + a[:, j])),
        )
        if diff <= DUPLICATE_TOL:
            raise DuplicateAtom(f"atoms {i} and {j} coincide up to sign")


def _coherence_from_gram(gram: np.ndarray) -> CoherenceReport:
    off = np.abs(np.asarray(gram, dtype=np.float64))
    np.fill_diagonal(off, 0.0)
    sums = off.sum(axis=1)
    worst = int(np.argmax(sums))  # first maximiser -> lowest index on ties
    mu1 = float(sums[worst])
    mu = float(off.max()) if off.shape[0] > 1 else 0.0
    return CoherenceReport(
        mu1=mu1,
        mu=mu,
        lower_frame=1.0 - 2.0 * mu1,
        upper_frame=1.0 + 2.0 * mu1,
        worst_atom=worst,
    )


def _mu1(atoms: np.ndarray) -> float:
    g = np.abs(atoms.T @ atoms)
    np.fill_diagonal(g, 0.0)
    return float(g.sum(axis=1).max())


def new_dictionary(matrix, label: str = "", normalize: bool = False) -> Dictionary:
    """Validate a ``dim x K`` matrix of atoms and wrap it as a Dictionary.

    Columns whose norm is off by more than ``UNIT_TOL`` but at most
    ``NORMALIZABLE_TOL`` are rescaled; worse columns raise
    :class:`NormViolation` unless ``normalize`` is set, in which case every
    nonzero column is rescaled.

    Raises
    ------
    ZeroAtom
        A column is identically zero.
    NormViolation
        A column norm is off by more than ``NORMALIZABLE_TOL``.
    DuplicateAtom
        Two columns agree up to sign within ``DUPLICATE_TOL``.
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a dim x K matrix with dim, K >= 1, got shape {a.shape}")
    norms = np.linalg.norm(a, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroAtom(f"column {zero[0]} is all zeros")
    dev = np.abs(norms - 1.0)
    if not normalize and np.any(dev > NORMALIZABLE_TOL):
        j = int(np.argmax(dev > NORMALIZABLE_TOL))
        raise NormViolation(f"column {j} has norm {norms[j]!r}")
    fix = np.ones_like(norms, dtype=bool) if normalize else dev > UNIT_TOL
    a[:, fix] /= norms[fix]
    return Dictionary(a, label=label)


def cumulative_coherence(D: Dictionary) -> CoherenceReport:
    """Max over atoms of the summed absolute inner products with all others."""
    return D.coherence


def frame_bounds_check(D: Dictionary, coeffs: SparseRepresentation) -> FrameCheck:
    idx = [check_index(D, i) for i in coeffs.entries]
    c = np.array([coeffs.entries[i] for i in idx], dtype=np.float64)
    energy = float(c @ c)
    mu1 = D.coherence.mu1
    if idx:
        v = D.atoms[:, idx] @ c
        mid = float(v @ v)
    else:
        mid = 0.0
    lhs = (1.0 - 2.0 * mu1) * energy
    rhs = (1.0 + 2.0 * mu1) * energy
    slack = 1e-9 * energy
    return FrameCheck(lhs, mid, rhs, bool(lhs <= mid + slack and mid <= rhs + slack))


def build_orthonormal(dim: int) -> Dictionary:
    if dim < 1:
        raise ValueError("dim must be positive")
    return Dictionary(np.eye(dim), label=f"orthonormal({dim})")


def _normalize_columns(a: np.ndarray) -> np.ndarray:
    return a / np.linalg.norm(a, axis=0)


def build_incoherent(
    dim: int,
    count: int,
    target_mu1: float,
    seed: int = 0,
    max_attempts: int = 100,
    orthogonalize: bool = True,
) -> Dictionary:
    """Random unit-norm dictionary whose cumulative coherence is at most ``target_mu1``.

    Each attempt draws a ``dim x count`` standard-normal matrix and normalises
    its columns. If that draw is too coherent and ``orthogonalize`` is set,
    the draw is blended with its nearest matrix with orthonormal columns
    (the polar factor), ``normalize((1 - t) Q + t A)``, and ``t`` is pushed as
    high as the target allows by bisection. The result therefore sits just
    under ``target_mu1`` rather than near zero.

    The blend only exists for ``count <= dim``: any dictionary with
    ``mu1 < 1`` has a strictly diagonally dominant Gram matrix, so its atoms
    are linearly independent.
    """
    if dim < 1 or count < 1:
        raise ValueError("dim and count must be positive")
    if not target_mu1 > 0:
        raise ValueError("target_mu1 must be positive")
    if max_attempts < 1:
        raise ValueError("max_attempts must be positive")
    rng = np.random.default_rng(seed)
    label = f"incoherent({dim},{count},{target_mu1!r},seed={seed})"
    best_seen = np.inf
    for _ in range(max_attempts):
        raw = _normalize_columns(rng.standard_normal((dim, count)))
        mu_raw = _mu1(raw)
        if mu_raw <= target_mu1:
            return Dictionary(raw, label=label)
        best_seen = min(best_seen, mu_raw)
        if not orthogonalize or count > dim:
            continue
        u, _, vt = np.linalg.svd(raw, full_matrices=False)
        q = u @ vt
        base = _normalize_columns(q)
        if _mu1(base) > target_mu1:
            best_seen = min(best_seen, _mu1(base))
            continue
        lo, hi, best = 0.0, 1.0, base
        for _ in range(60):
            t = 0.5 * (lo + hi)
            cand = _normalize_columns((1.0 - t) * q + t * raw)
            if _mu1(cand) <= target_mu1:
                lo, best = t, cand
            else:
                hi = t
        return Dictionary(best, label=label)
    raise TargetUnreachable(
        f"no draw of {count} atoms in R^{dim} reached mu1 <= {target_mu1!r} "
        f"after {max_attempts} attempts (best {best_seen:.6g})"
    )


def save_dictionary(D: Dictionary, path) -> None:
    lines = [f"{D.dim} {D.count}"]
    for k in range(D.count):
        lines.append(" ".join(format(x, ".17g") for x in D.atoms[:, k]))
    _atomic_write(path, "\n".join(lines) + "\n")


def load_dictionary(path, label: str | None = None) -> Dictionary:
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise ValueError(f"{path}: first line must be 'dim K'")
    dim, count = int(rows[0][0]), int(rows[0][1])
    if len(rows) - 1 != count:
        raise ValueError(f"{path}: expected {count} atom lines, found {len(rows) - 1}")
    cols = []
    for n, r in enumerate(rows[1:], start=2):
        if len(r) != dim:
            raise ValueError(f"{path}:{n}: expected {dim} values, found {len(r)}")
        cols.append([float(x) for x in r])
    if label is None:
        label = os.path.splitext(os.path.basename(str(path)))[0]
    return new_dictionary(np.array(cols).T, label=label)


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
