from .cluster import EmbeddingFrame, KMeansResult, kmeans
from .features import FeatureMatrix, dr1_time_compress
from .umap import dr2_umap, umap_embed

__all__ = [
    "EmbeddingFrame",
    "FeatureMatrix",
    "KMeansResult",
    "dr1_time_compress",
    "dr2_umap",
    "kmeans",
    "umap_embed",
]
