"""Language-coherence scoring for transcribed narratives and the longitudinal
digital marker built on top of it.

The heavy lifting lives in the C++ extension; this package re-exports the
operations most useful from Python.
"""

from ._core import (
    Bin,
    BinSpec,
    CohmarkError,
    Corpus,
    Diagnosis,
    Narrative,
    PairLabel,
    Scorer,
    SessionMeta,
    TestResult,
    Utterance,
    UtterancePair,
    assign_bin,
    baseline_similarity_score,
    concat_features,
    default_bins,
    delta_end_start,
    delta_long,
    describe,
    enumerate_pairs,
    generative_score,
    load_cohort,
    mann_whitney,
    margin_loss,
    narrative_marker,
    normalize_text,
    parse_transcript,
    pct_delta,
    resample_negatives,
    sequence_perplexity,
    split_by_subject,
    t_test,
)

__all__ = [
    "Bin",
    "BinSpec",
    "CohmarkError",
    "Corpus",
    "Diagnosis",
    "Narrative",
    "PairLabel",
    "Scorer",
    "SessionMeta",
    "TestResult",
    "Utterance",
    "UtterancePair",
    "assign_bin",
    "baseline_similarity_score",
    "concat_features",
    "default_bins",
    "delta_end_start",
    "delta_long",
    "describe",
    "enumerate_pairs",
    "generative_score",
    "load_cohort",
    "mann_whitney",
    "margin_loss",
    "narrative_marker",
    "normalize_text",
    "parse_transcript",
    "pct_delta",
    "resample_negatives",
    "sequence_perplexity",
    "split_by_subject",
    "t_test",
]

__version__ = "0.1.0"
