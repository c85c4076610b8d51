"""Pure and orthogonal greedy approximation over finite dictionaries.

Dictionaries are measured by their cumulative coherence (the largest sum of
absolute inner products between one atom and all the others). The analysis
module checks the convergence bounds that hold for small cumulative
coherence along actual runs.
"""

from .analysis import (
    RateFit,
    Theorem,
    TheoremReport,
    best_mterm_oracle,
    check_energy_recursion,
    check_exact_recovery,
    check_exponential_decay,
    check_lemma35,
    check_theorem1,
    check_theorem2,
    fit_decay_exponent,
)
from .dictionary import (
    CoherenceReport,
    Dictionary,
    FrameCheck,
    build_incoherent,
    build_orthonormal,
    cumulative_coherence,
    frame_bounds_check,
    load_dictionary,
    new_dictionary,
    save_dictionary,
)
from .greedy import (
    Algorithm,
    GreedyTrace,
    StepRecord,
    StopReason,
    StopRule,
    project_onto_atoms,
    run_oga,
    run_pga,
    save_trace,
    select_atom,
    trace_from_residuals,
    trace_to_csv,
)
from .signals import (
    LemmaReport,
    SparseRepresentation,
    check_lemma2,
    check_lemma3_descent,
    gen_sparse_signal,
    load_representation,
    pga_coefficient_step,
    rep_quasi_norm,
    save_representation,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "best_mterm_oracle",
    "build_incoherent",
    "build_orthonormal",
    "check_energy_recursion",
    "check_exact_recovery",
    "check_exponential_decay",
    "check_lemma2",
    "check_lemma35",
    "check_lemma3_descent",
    "check_theorem1",
    "check_theorem2",
    "CoherenceReport",
    "cumulative_coherence",
    "Dictionary",
    "fit_decay_exponent",
    "frame_bounds_check",
    "FrameCheck",
    "gen_sparse_signal",
    "GreedyTrace",
    "LemmaReport",
    "load_dictionary",
    "load_representation",
    "new_dictionary",
    "pga_coefficient_step",
    "project_onto_atoms",
    "RateFit",
    "rep_quasi_norm",
    "run_oga",
    "run_pga",
    "save_dictionary",
    "save_representation",
    "save_trace",
    "select_atom",
    "SparseRepresentation",
    "StepRecord",
    "StopReason",
    "StopRule",
    "synthesize",
    "Theorem",
    "TheoremReport",
    "trace_from_residuals",
    "trace_to_csv",
]
