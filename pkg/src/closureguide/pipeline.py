"""End-to-end guided saliency for one image."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .closure import ClosureParams, closure_map
from .contours import EdgeParams, detect_edges, link_edges
from .prior import PriorParams, component_weights, fit_gmm, prior_map
from .saliency import IttiParams, SigParams, combine, itti_saliency, signature_saliency


@dataclass
class GuidedResult:
    contours: np.ndarray
    closure: np.ndarray
    components: list
    weights: list
    prior: np.ndarray
    bottom_up: np.ndarray
    combined: np.ndarray
    chains: list = field(default_factory=list)


def extract_contours(image, params=None):
    """Detect and link edges; returns ``(chains, mask)``."""
    params = params or EdgeParams()
    edges = detect_edges(image, params)
    return link_edges(edges, params.min_chain_length)


def closure_prior(contours, closure_params=None, prior_params=None):
    """Closure map, fitted components, their weights and the prior map."""
    closure = closure_map(contours, closure_params or ClosureParams())
    h, w = closure.shape
    if not np.any(closure > 0):
        # nothing enclosed anywhere: the prior must not veto the bottom-up map
        return closure, [], [], np.ones((h, w))
    components = fit_gmm(closure, prior_params or PriorParams())
    weights = component_weights(components, w, h)
    return closure, components, weights, prior_map(components, weights, w, h)


def bottom_up_saliency(image, model, itti_params=None, sig_params=None):
    if model == "it":
        return itti_saliency(image, itti_params or IttiParams())
    if model == "sig":
        return signature_saliency(image, sig_params or SigParams())
    raise ValueError(f"unknown model {model!r} (expected 'it' or 'sig')")


def guided_saliency(image, model="it", contours=None, edge_params=None, closure_params=None,
                    prior_params=None, itti_params=None, sig_params=None):
    """Run the full model on one image.

    ``contours`` is a line drawing (bool mask); when omitted it is extracted
    from ``image`` by edge detection and linking.
    """
    chains = []
    if contours is None:
        chains, contours = extract_contours(image, edge_params)
    closure, components, weights, prior = closure_prior(contours, closure_params, prior_params)
    bottom_up = bottom_up_saliency(image, model, itti_params, sig_params)
    return GuidedResult(
        contours=np.asarray(contours, dtype=bool),
        closure=closure,
        components=components,
        weights=weights,
        prior=prior,
        bottom_up=bottom_up,
        combined=combine(bottom_up, prior),
        chains=chains,
    )
