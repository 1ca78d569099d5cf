"""Deterministic late-fusion evaluation engine for ECG embedding sets."""

__version__ = "0.1.0"

from .ebf import EmbeddingSet, align, encode_ebf, decode_ebf, read_csv, read_ebf, write_ebf
from .errors import (
    AlignmentError,
    ConfigError,
    DegenerateAffinityError,
    EcgfuseError,
    FormatError,
    LabelConflictError,
    SinkError,
    StratificationError,
    TruncationError,
    UndefinedMetricError,
    UnsupportedVersionError,
    ValidationError,
)
from .fusion import MinMaxScaler, apply_minmax, fit_minmax, fuse, scale_set
from .gbdt import (
    GBDTConfig,
    GBDTModel,
    TreeNode,
    load_model,
    model_from_json,
    model_to_json,
    predict_margin,
    predict_proba,
    save_model,
    train,
)
from .metrics import EvalResult, SummaryStats, aucpr, auroc, evaluate, summarize
from .resampling import (
    ArmOutcome,
    BenchmarkReport,
    ReshuffleSpec,
    SplitPlan,
    fused_arm_name,
    run_benchmark,
    stratified_split,
    stratum_test_count,
)
from .rng import Xoshiro256StarStar
from .synth import SynthConfig, bayes_auroc, fused_dprime, generate
from .tsne import (
    Embedding2D,
    TsneConfig,
    conditional_affinities,
    embed_set,
    export_coords_csv,
    export_scatter_svg,
    kl_divergence,
    pairwise_affinities,
    subsample_balanced,
    tsne_embed,
)

__all__ = [name for name in dir() if not name.startswith("_")]
