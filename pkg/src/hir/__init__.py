"""hir: hybrid importance resampling for pretraining data selection.

Selects a size-k subset of a large raw text corpus whose distribution
matches a small target corpus, by combining importance weights from a
hashed n-gram multinomial channel and a Gaussian-mixture channel over
document embeddings, and prepares the selection for masked-language-
model pretraining.
"""

from .corpus import (
    CorpusManifest,
    DocumentRecord,
    SelectionManifest,
    read_selection,
    stream_documents,
    write_documents,
    write_selection,
)
from .diagnostics import AlignmentReport, alignment_report, kl_divergence
from .embeddings import (
    EmbeddingMatrix,
    iter_embedding_chunks,
    read_embeddings,
    write_embeddings,
)
from .errors import CorpusError, EmbeddingFormatError, HirError, PipelineError
from .gmm import (
    DiagonalGmm,
    EmStats,
    fit_em,
    fit_incremental,
    load_gmm,
    log_densities,
    log_density,
    responsibilities,
    save_gmm,
)
from .mlm import IGNORE_INDEX, MaskedBatch, MaskingConfig, mask_tokens
from .ngram_model import (
    MultinomialModel,
    fit_multinomial,
    load_multinomial,
    log_prob,
    log_weight_ng,
    save_multinomial,
)
from .ngrams import FeatureVector, featurize, fnv1a_64, tokenize
from .pipeline import PipelineConfig, extract_selected, run_select
from .resample import (
    SelectionResult,
    WeightTable,
    combine_log_weights,
    deterministic_topk,
    gumbel_topk,
)

__version__ = "0.1.0"
