"""Legibility boosting for graphic design templates.

The library builds the full pre-edit artifact set for a template --
cleaned prompt, optimized layout, adaptive strength, contrast-injected
auxiliary image, and edit mask -- then drives a generative backend to
produce a catalog of design variations, with metrics for evaluation.
"""

from .backend import (
    BackendError,
    BackendIdentity,
    EditRequest,
    HTTPBackend,
    MockBackend,
    make_backend,
)
from .color import (
    ColorHSV,
    ColorLab,
    ColorLexicon,
    ColorRGB,
    contrast_ratio,
    default_lexicon,
    delta_e_2000,
    delta_e_2000_lab,
    nearest_color_name,
    opposite_color,
    relative_luminance,
)
from .injection import (
    AuxiliaryBundle,
    CalibrationParams,
    InjectionConfig,
    SegmentedObject,
    apply_color_injection,
    apply_luminance,
    color_injection_weight,
    compose_auxiliary,
    gaussian_mask,
    hsv_neighborhood_fraction,
    luminance_delta,
    select_objects,
)
from .layout import LayoutProposal, Placement, SizedAsset, propose_layout
from .metrics import MetricsReport, compute_metrics
from .pipeline import PipelineRun, generate_variations, run_pipeline
from .prompts import ColorTermSpan, Prompt, clean_prompt, detect_color_terms
from .saliency import apply_center_bias, compute_saliency, load_saliency
from .strength import (
    StrengthModel,
    StrengthTrainingSet,
    fit_strength_model,
    predict_strength,
)
from .template import DesignAsset, DesignTemplate, PipelineConfig, load_config, load_template
from .texture import PatchSet, fractal_noise, mine_patches, quilt_texture

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
