from .aligned import AlignedRecommender, LatentGaussian, NumericError, sample_latent
from .backbones import (
    Backbone,
    BackboneSpec,
    MacridOptions,
    MacridVAE,
    MultiDAE,
    MultiVAE,
    build_backbone,
)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .encoders import (
    EmbedderAdapter,
    GaussianHead,
    GenreProfileEncoder,
    HashedTextEncoder,
    sentence_features,
)
from .genre import GenreProfile, genre_profile

__all__ = [
    "AlignedRecommender",
    "Backbone",
    "BackboneSpec",
    "CheckpointError",
    "EmbedderAdapter",
    "GaussianHead",
    "GenreProfile",
    "GenreProfileEncoder",
    "HashedTextEncoder",
    "LatentGaussian",
    "MacridOptions",
    "MacridVAE",
    "MultiDAE",
    "MultiVAE",
    "NumericError",
    "build_backbone",
    "genre_profile",
    "load_checkpoint",
    "sample_latent",
    "save_checkpoint",
    "sentence_features",
]
