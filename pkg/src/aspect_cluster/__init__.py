"""Aspect-term evaluation, adaptive comment clustering, and preference tooling."""

__version__ = "0.1.0"

from .clustering import (
    Cluster,
    ClusteringError,
    ClusterSet,
    DyCluConfig,
    MissingClusterLabelsError,
    build_representation,
    cluster_and_score,
    cluster_corpus,
    dyclu_cluster,
    nmi,
    ranking_score,
)
from .corpus import (
    Comment,
    Corpus,
    CorpusValidationError,
    Language,
    Polarity,
    Split,
    SplitStats,
    load_corpus,
    split_stats,
    write_corpus,
)
from .embedding import (
    DEFAULT_DIM,
    DeterministicEmbedder,
    EmbeddingError,
    EmbeddingProvider,
    EmbeddingProviderConfig,
    ProviderKind,
    RemoteEmbedder,
    concat_normalize,
    cosine_similarity,
    make_provider,
    mean_pool,
)
from .evaluation import (
    MatchConfig,
    Matching,
    MatchReport,
    MissingPredictionsError,
    cat_count_histogram,
    cumulative_mass,
    empty_prediction_confusion,
    evaluate_corpus,
    match_comment,
    scale_sweep,
)
from .generation import (
    Annotation,
    AnnotationParseError,
    CachedChatClient,
    ChatError,
    ChatTransportError,
    GenerationFailure,
    GenerationResult,
    HttpChatClient,
    LanguageMismatchError,
    PromptTemplate,
    default_templates,
    format_annotation,
    generate_cats,
    instruction_prompt,
    parse_annotation,
    render_prompt,
)
from .preference import (
    DpoConfig,
    PreferenceExample,
    PreferenceSkeleton,
    build_preference_set,
    dpo_grad,
    dpo_loss,
    format_cats,
    sigmoid,
    write_preference_jsonl,
)

__all__ = [name for name in dir() if not name.startswith("_")]
