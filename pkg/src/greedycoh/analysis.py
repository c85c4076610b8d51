"""Convergence checks along greedy traces, decay-rate fits and an exhaustive m-term oracle."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary
from .errors import BadExponent, InsufficientSteps, SingularGram, TooLarge, WrongAlgorithm
from .greedy import Algorithm, GreedyTrace, project_onto_atoms

USABLE_REL = 1e-13
ORACLE_LIMIT = 2_000_000


class Theorem(str, enum.Enum):
    THEOREM_A_RECOVERY = "TheoremA_recovery"
    THEOREM_A_EXPONENTIAL = "TheoremA_exponential"
    THEOREM_1 = "Theorem1"
    THEOREM_2 = "Theorem2"
    ENERGY_RECURSION = "EnergyRecursion"
    LEMMA_35 = "Lemma35"
    LEMMA_1 = "Lemma1"
    LEMMA_2 = "Lemma2"
    LEMMA_3 = "Lemma3"
    ORACLE = "Oracle"


REPORT_CSV_HEADER = "theorem,holds,worst_margin,worst_step"


@dataclass(frozen=True)
class RateFit:
    exponent: float
    intercept: float
    r_squared: float
    range: tuple[int, int]

    def as_text(self) -> str:
        return "\n".join(
            [
                f"exponent={self.exponent!r}",
                f"intercept={self.intercept!r}",
                f"r_squared={self.r_squared!r}",
                f"m_lo={self.range[0]}",
                f"m_hi={self.range[1]}",
            ]
        )


@dataclass(frozen=True)
class TheoremReport:
    theorem: Theorem
    holds: bool
    worst_margin: float
    worst_step: int
    detail: str = ""

    def as_text(self) -> str:
        return "\n".join(
            [
                f"theorem={self.theorem.value}",
                f"holds={self.holds}",
                f"worst_margin={format(self.worst_margin, '.17g')}",
                f"worst_step={self.worst_step}",
                f"detail={self.detail}",
            ]
        )

    def csv_row(self) -> str:
        return (
            f"{self.theorem.value},{self.holds},"
            f"{format(self.worst_margin, '.17g')},{self.worst_step}"
        )


def parse_report_text(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        key, sep, value = line.partition("=")
        if sep:
            out[key] = value
    return out


def _require(trace: GreedyTrace, algorithm: Algorithm) -> None:
    if trace.algorithm != algorithm:
        raise WrongAlgorithm(f"expected a {algorithm.value} trace, got {trace.algorithm.value}")


def _usable(trace: GreedyTrace) -> tuple[np.ndarray, np.ndarray]:
    """Step numbers ``m >= 1`` and residual norms above the noise floor."""
    r = trace.residual_norms()[1:]
    m = np.arange(1, r.size + 1)
    keep = r > USABLE_REL * trace.initial_norm
    return m[keep], r[keep]


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum((y - (intercept + slope * x)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return slope, intercept, r2


def fit_decay_exponent(trace: GreedyTrace, m_lo: int, m_hi: int) -> RateFit:
    """Least-squares slope of ``log ||f_m||`` against ``log m`` on ``[m_lo, m_hi]``."""
    if m_lo < 1 or m_hi <= m_lo:
        raise ValueError("need 1 <= m_lo < m_hi")
    if m_hi > len(trace):
        raise InsufficientSteps(f"m_hi={m_hi} beyond trace length {len(trace)}")
    m, r = _usable(trace)
    keep = (m >= m_lo) & (m <= m_hi)
    m, r = m[keep], r[keep]
    if m.size < 8:
        raise InsufficientSteps(f"only {m.size} usable steps in [{m_lo}, {m_hi}]")
    slope, intercept, r2 = _ols(np.log(m), np.log(r))
    return RateFit(slope, intercept, r2, (int(m_lo), int(m_hi)))


def check_theorem1(trace: GreedyTrace, n1: float, horizon: int | None = None) -> TheoremReport:
    """``||f_m|| <= n1 / sqrt(m)`` for every ``m >= 1``.

    ``n1`` must bound the class 1-norm of ``f`` from above, e.g. the 1-norm
    of a representation. ``horizon`` extends the check past the end of the
    trace using the final residual.
    """
    _require(trace, Algorithm.PGA)
    if not n1 > 0:
        raise ValueError("n1 must be positive")
    last = max(len(trace), horizon or 0)
    if last == 0:
        return TheoremReport(Theorem.THEOREM_1, True, math.inf, 0, "empty trace")
    m = np.arange(1, last + 1)
    r = np.array([trace.residual_at(k) for k in m])
    margin = n1 / np.sqrt(m) - r
    worst = int(np.argmin(margin))
    holds = bool(np.all(margin >= -1e-12 * n1))
    return TheoremReport(
        Theorem.THEOREM_1, holds, float(margin[worst]), int(m[worst]), f"n1={n1!r} m_max={last}"
    )


def check_theorem2(
    trace: GreedyTrace, p: float, np_norm: float, mu1: float | None = None
) -> TheoremReport:
    """Decay exponent at least ``1/p - 1/2`` (minus 0.1 slack) on the tail ``[m_hi/4, m_hi]``.

    When the trace carries tracked coefficients and ``mu1 < 1/3`` is given,
    the max-coefficient bound ``max|c_m| <= 2 (1 - 3 mu1)^-1 m^(-1/p) np_norm``
    is also checked at every step; ``worst_margin``/``worst_step`` then refer
    to that bound, otherwise to the exponent.
    """
    _require(trace, Algorithm.PGA)
    if not 1.0 <= p < 2.0:
        raise BadExponent(f"p must satisfy 1 <= p < 2, got {p!r}")
    m, _ = _usable(trace)
    if m.size < 16:
        raise InsufficientSteps(f"only {m.size} nonzero-residual steps, need 16")
    m_hi = int(m[-1])
    m_lo = max(1, m_hi // 4)
    fit = fit_decay_exponent(trace, m_lo, m_hi)
    target = -(1.0 / p - 0.5) + 0.1
    rate_ok = fit.exponent <= target
    detail = [
        f"exponent={fit.exponent!r}",
        f"required<={target!r}",
        f"r_squared={fit.r_squared!r}",
        f"window={m_lo}..{m_hi}",
    ]
    worst_margin, worst_step = target - fit.exponent, m_hi
    bound_ok = True
    path = trace.coefficient_path()
    if path is not None and mu1 is not None:
        if mu1 >= 1.0 / 3.0:
            detail.append("coefficient_bound=skipped(mu1>=1/3)")
        else:
            k = np.arange(1, len(path))
            cmax = np.array([rep.max_abs() for rep in path[1:]])
            bound = 2.0 / (1.0 - 3.0 * mu1) * k ** (-1.0 / p) * np_norm
            margins = bound - cmax
            j = int(np.argmin(margins))
            bound_ok = bool(np.all(margins >= -1e-12 * np_norm))
            worst_margin, worst_step = float(margins[j]), int(k[j])
            detail.append(f"coefficient_bound={bound_ok}")
    else:
        detail.append("coefficient_bound=not_checked")
    return TheoremReport(
        Theorem.THEOREM_2, bool(rate_ok and bound_ok), worst_margin, worst_step, " ".join(detail)
    )


def check_exact_recovery(trace: GreedyTrace, true_support, tol: float = 1e-9) -> TheoremReport:
    """Zero residual (to ``tol * ||f||``) after exactly ``|support|`` steps on the true support."""
    _require(trace, Algorithm.OGA)
    truth = set(int(k) for k in true_support)
    chosen = trace.selected()
    final = trace.residual_at(len(trace))
    wrong = next((i + 1 for i, k in enumerate(chosen) if k not in truth), None)
    holds = final <= tol * trace.initial_norm and set(chosen) == truth and len(chosen) == len(truth)
    step = wrong if wrong is not None else len(chosen)
    detail = f"steps={len(chosen)} sparsity={len(truth)}"
    if wrong is not None:
        detail += f" first_wrong_selection={chosen[wrong - 1]}@{wrong}"
    return TheoremReport(
        Theorem.THEOREM_A_RECOVERY, bool(holds), tol * trace.initial_norm - final, step, detail
    )


def check_exponential_decay(trace: GreedyTrace) -> TheoremReport:
    """Semi-log regression of ``log ||f_m||`` on ``m``: negative slope and ``r^2 >= 0.9``."""
    _require(trace, Algorithm.PGA)
    m, r = _usable(trace)
    if m.size < 16:
        return TheoremReport(
            Theorem.THEOREM_A_EXPONENTIAL, True, 0.0, len(trace),
            f"finite termination: {m.size} nonzero-residual steps",
        )
    slope, intercept, r2 = _ols(m.astype(float), np.log(r))
    holds = slope < 0 and r2 >= 0.9
    return TheoremReport(
        Theorem.THEOREM_A_EXPONENTIAL, bool(holds), r2 - 0.9, int(m[-1]),
        f"slope={slope!r} intercept={intercept!r} r_squared={r2!r}",
    )


def check_energy_recursion(trace: GreedyTrace, a_bound: float) -> TheoremReport:
    """``a_{m+1} <= a_m (1 - a_m / A)`` and ``a_m <= A / m`` with ``a_m = ||f_{m-1}||^2``.

    Both inequalities get a relative slack of ``1e-9 * A``.
    """
    _require(trace, Algorithm.PGA)
    if not a_bound > 0:
        raise ValueError("a_bound must be positive")
    a = trace.residual_norms() ** 2  # a[m-1] = a_m
    slack = 1e-9 * a_bound
    m = np.arange(1, a.size + 1)
    conclusion = a_bound / m - a
    recursion = a[:-1] * (1.0 - a[:-1] / a_bound) - a[1:]
    margins = np.concatenate([conclusion, recursion])
    steps = np.concatenate([m, m[1:]])
    j = int(np.argmin(margins))
    holds = bool(np.all(margins >= -slack))
    detail = (
        f"A={a_bound!r} conclusion_ok={bool(np.all(conclusion >= -slack))} "
        f"recursion_ok={bool(np.all(recursion >= -slack))}"
    )
    return TheoremReport(Theorem.ENERGY_RECURSION, holds, float(margins[j]), int(steps[j]), detail)


def check_lemma35(trace: GreedyTrace) -> TheoremReport:
    """``max_g |<f_m, g>| >= ||f_m||^2 / N1(m)`` with ``N1(m)`` the tracked 1-norm."""
    _require(trace, Algorithm.PGA)
    path = trace.coefficient_path()
    if path is None:
        raise ValueError("trace has no tracked coefficients")
    norms = trace.residual_norms()
    margins = []
    for m, s in enumerate(trace.steps):
        n1 = path[m].one_norm()
        margins.append(abs(s.inner_product) - (norms[m] ** 2 / n1 if n1 > 0 else 0.0))
    if not margins:
        return TheoremReport(Theorem.LEMMA_35, True, math.inf, 0, "empty trace")
    j = int(np.argmin(margins))
    holds = margins[j] >= -1e-9 * trace.initial_norm
    return TheoremReport(Theorem.LEMMA_35, bool(holds), margins[j], j, f"steps={len(trace)}")


def best_mterm_oracle(D: Dictionary, f, m: int) -> tuple[float, tuple[int, ...]]:
    """Exhaustive best ``m``-term approximation error over all supports of size ``m``.

    Supports are visited in lexicographic order and only a strictly smaller
    error replaces the incumbent, so ties resolve to the lexicographically
    smallest support. Singular supports are skipped.
    """
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    if m > D.count:
        raise ValueError(f"m={m} exceeds dictionary size {D.count}")
    n = math.comb(D.count, m)
    if n > ORACLE_LIMIT:
        raise TooLarge(f"C({D.count}, {m}) = {n} supports exceeds the limit {ORACLE_LIMIT}")
    f = np.asarray(f, dtype=np.float64)
    best_err, best_sup = math.inf, None
    for sup in itertools.combinations(range(D.count), m):
        try:
            _, r = project_onto_atoms(D, sup, f)
        except SingularGram:
            continue
        err = float(np.linalg.norm(r))
        if err < best_err:
            best_err, best_sup = err, sup
    if best_sup is None:
        raise SingularGram(f"every support of size {m} is singular")
    return best_err, best_sup
