"""Style similarity for bitmap infographics.

Pipeline: decode and normalize images, extract low-level visual features,
reduce with per-feature PCA, learn a diagonal weighted metric from
crowdsourced triplet judgments, and serve search-by-example retrieval.
"""

from .errors import (
    DecodeError,
    DimensionMismatch,
    EmptyData,
    EmptyInput,
    FingerprintMismatch,
    InfostyleError,
    InsufficientData,
    InvalidParam,
    MissingFeature,
    MissingPca,
    NonConvergenceWarning,
    NonFiniteInput,
    ParseError,
)
from .features import (
    FeatureVector,
    color_histogram,
    compute_feature,
    hog,
    lbp,
    luminance_histogram,
    read_features_jsonl,
    write_features_jsonl,
)
from .imaging import WINDOW_HEIGHT, WINDOW_WIDTH, decode_image, normalize_window
from .metric import (
    EmbeddedTriplet,
    MetricModel,
    baseline_weights,
    choice_probability,
    distance,
    evaluate,
    objective,
    select_lambda,
    train,
)
from .reduction import (
    FeatureConfig,
    FeatureEntry,
    PcaParams,
    apply_pca,
    assemble,
    fit_pca,
    parse_config,
)
from .retrieval import (
    SearchIndex,
    build_index,
    embed_features,
    embed_image,
    load_index,
    query,
    save_index,
)
from .triplets import (
    AgreementRow,
    LabeledTriplet,
    Tie,
    TripletResponses,
    agreement_table,
    majority_label,
    oracle_consistency,
    read_triplets_csv,
    split_train_test,
)

__version__ = "0.1.0"
