"""Score-based causal representation learning from paired hard interventions.

The heavy lifting lives in the C++ extension; this package re-exports the
pipeline entry points: synthetic-data generation, the exact score oracle,
encoder fitting, latent-DAG recovery, and evaluation metrics.
"""

from ._core import (
    Dag,
    DecoderGlm,
    EncoderLinear,
    EnvironmentId,
    FitResult,
    GraphMode,
    GscaleConfig,
    GscaleiError,
    QuadraticScm,
    ScoreChangeMatrices,
    ScoreDiffBatch,
    align_permutation,
    decode,
    decoder_jacobian,
    derive_stream,
    encode,
    encoder_inverse,
    fit_encoder,
    gradient_audit,
    gscale_i,
    latent_score,
    log_density,
    normalized_l2,
    objective,
    objective_gradient,
    observed_score_diff,
    oracle_score_diffs,
    pseudo_inverse,
    recover_graph,
    sample_decoder,
    sample_er_dag,
    sample_latent,
    sample_mechanisms,
    score_change_matrices,
    shd,
)

__all__ = [
    "Dag",
    "DecoderGlm",
    "EncoderLinear",
    "EnvironmentId",
    "FitResult",
    "GraphMode",
    "GscaleConfig",
    "GscaleiError",
    "QuadraticScm",
    "ScoreChangeMatrices",
    "ScoreDiffBatch",
    "align_permutation",
    "decode",
    "decoder_jacobian",
    "derive_stream",
    "encode",
    "encoder_inverse",
    "fit_encoder",
    "gradient_audit",
    "gscale_i",
    "latent_score",
    "log_density",
    "normalized_l2",
    "objective",
    "objective_gradient",
    "observed_score_diff",
    "oracle_score_diffs",
    "pseudo_inverse",
    "recover_graph",
    "sample_decoder",
    "sample_er_dag",
    "sample_latent",
    "sample_mechanisms",
    "score_change_matrices",
    "shd",
]

__version__ = "0.1.0"
