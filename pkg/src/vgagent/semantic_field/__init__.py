"""Semantic feature lifting on frozen splats, codebook segmentation and view scoring."""

from .annotate import RankedView, highlight, mask_iou, rank_annotation_views, view_score
from .codebook import Codebook, discretize_codebook, kmeans, segment_instances
from .evaluate import evaluate_segmentation, label_masks, match_labels, segmentation_scores
from .fixture import SplatFixture, make_fixture, ring_views
from .losses import contrastive_loss, feature_loss, mask_means, quantization_loss, smoothing_loss
from .occlusion import footprint, occlusion_mask, render_clusters, select_training_views
from .pipeline import FieldConfig, FieldResult, run_pipeline
from .render import (
    BlendWeights, Camera, FeatureMap, Splat, SplatScene, blend_weights, look_at, render_colors, render_feature_map,
)
from .train import lifting_objective, train_features, view_weights

__all__ = [
    "BlendWeights", "Camera", "Codebook", "FeatureMap", "FieldConfig", "FieldResult", "RankedView", "Splat",
    "SplatFixture", "SplatScene", "blend_weights", "contrastive_loss", "discretize_codebook", "evaluate_segmentation",
    "feature_loss", "footprint", "highlight", "kmeans", "label_masks", "lifting_objective", "look_at", "make_fixture",
    "mask_iou", "mask_means", "match_labels", "occlusion_mask", "quantization_loss", "rank_annotation_views",
    "render_clusters", "render_colors", "render_feature_map", "ring_views", "run_pipeline", "segment_instances",
    "segmentation_scores", "select_training_views", "smoothing_loss", "train_features", "view_score", "view_weights",
]
