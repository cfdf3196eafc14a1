"""Early operative-difficulty prediction from partial surgical video.

Thin Python layer over the C++ core: frame sampling, Earliness-Stability
metrics, synthetic data, splits and end-to-end experiments.
"""

from ._surgprod import (  # noqa: F401
    ConfigError,
    DataError,
    InvalidArgument,
    NumericalError,
    StageError,
    build_plan,
    default_manifest,
    es,
    evaluate,
    evaluate_file,
    hit,
    macro_f1,
    majority_vote,
    mean_es,
    partition_local,
    pool_and_flatten,
    qwk,
    run_experiment,
    sample_indices,
    split_dataset,
    stability,
    stratified_split,
    synthesize_dataset,
)

__version__ = "0.1.0"
