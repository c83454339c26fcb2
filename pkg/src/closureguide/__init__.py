"""Closure-guided visual attention on line drawings.

Contour extraction, a closure-degree map and the Gaussian-mixture spatial
prior built from it, IT and SIG bottom-up saliency, fixation analytics and
ROC-Judd evaluation.
"""

from .analytics import DensityParams, cc, closure_score, density_map, guidance_metrics, mae, shape_features
from .closure import ClosureParams, closure_map
from .contours import EdgeParams, detect_edges, link_edges
from .evaluation import compare_models, roc_judd
from .fixations import FixationRecord, FixationSet
from .pipeline import guided_saliency
from .prior import PriorParams, component_weights, fit_gmm, prior_map
from .saliency import IttiParams, SigParams, combine, itti_saliency, signature_saliency

__version__ = "0.1.0"

__all__ = [
    "ClosureParams", "DensityParams", "EdgeParams", "FixationRecord", "FixationSet", "IttiParams",
    "PriorParams", "SigParams", "cc", "closure_map", "closure_score", "combine", "compare_models",
    "component_weights", "density_map", "detect_edges", "fit_gmm", "guidance_metrics", "guided_saliency",
    "itti_saliency", "link_edges", "mae", "prior_map", "roc_judd", "shape_features", "signature_saliency",
]
