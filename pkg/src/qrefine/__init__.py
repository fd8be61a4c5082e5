"""Quality-aware image refinement.

Compute a patch quality map for an image, then route it through three
adaptive stages: noise injection for low-quality regions, mask inpainting
for medium-quality regions, and quality-routed global enhancement.
Generative steps delegate to pluggable backends; classical fallbacks are
built in so everything runs offline.
"""

from .backends import (
    BackendEndpoint,
    BuiltinBackend,
    Enhancer,
    EnhanceRequest,
    InpaintRequest,
    RemoteBackend,
    enhance_remote,
    health_check,
    inpaint_remote,
)
from .corpus import (
    CorpusImage,
    DegradeRegion,
    DegradeSpec,
    apply_degradations,
    build_corpus,
    make_clean_image,
    random_degrade_spec,
)
from .errors import (
    BackendError,
    BackendUnavailableError,
    ConfigError,
    CorpusSpecError,
    ImageDecodeError,
    ImageSizeError,
    IntegrityError,
    ProtocolError,
    QRefineError,
    RequestTooLargeError,
    ShapeMismatchError,
    StageError,
    UnsolvableMaskError,
)
from .estimators import PatchQualityScorer, QualityRefiner
from .evalrun import EvalRecord, config_hash, eval_csv_lines, run_ablation, run_eval
from .field import (
    flatten_bicubic,
    keys_weight,
    make_mask,
    mask_fraction,
    mask_from_png,
    mask_to_png,
    noise_weight,
)
from .imaging import (
    blend,
    decode_gray_png,
    decode_image,
    encode_gray_png,
    encode_png,
    to_luma,
)
from .iqa import (
    DefaultScorer,
    QualityScorer,
    ScorerConfig,
    cell_score,
    global_quality,
    immerkaer_sigma,
    map_from_text,
    map_to_heatmap_png,
    map_to_text,
    pool_patches,
    score_cells,
    split_patches,
)
from .restore import builtin_blind_enhance, builtin_harmonic_inpaint, strength_blend
from .stages import (
    RefineConfig,
    StageRecord,
    StageReport,
    augment_prompt,
    run_pipeline,
    stage1_noise,
    stage2_inpaint,
    stage3_enhance,
)

__version__ = "0.1.0"

__all__ = [
    "BackendEndpoint",
    "BackendError",
    "BackendUnavailableError",
    "BuiltinBackend",
    "ConfigError",
    "CorpusImage",
    "CorpusSpecError",
    "DefaultScorer",
    "DegradeRegion",
    "DegradeSpec",
    "Enhancer",
    "EnhanceRequest",
    "EvalRecord",
    "ImageDecodeError",
    "ImageSizeError",
    "InpaintRequest",
    "IntegrityError",
    "PatchQualityScorer",
    "ProtocolError",
    "QRefineError",
    "QualityRefiner",
    "QualityScorer",
    "RefineConfig",
    "RemoteBackend",
    "RequestTooLargeError",
    "ScorerConfig",
    "ShapeMismatchError",
    "StageError",
    "StageRecord",
    "StageReport",
    "UnsolvableMaskError",
    "apply_degradations",
    "augment_prompt",
    "blend",
    "build_corpus",
    "builtin_blind_enhance",
    "builtin_harmonic_inpaint",
    "cell_score",
    "config_hash",
    "decode_gray_png",
    "decode_image",
    "encode_gray_png",
    "encode_png",
    "enhance_remote",
    "eval_csv_lines",
    "flatten_bicubic",
    "global_quality",
    "health_check",
    "immerkaer_sigma",
    "inpaint_remote",
    "keys_weight",
    "make_clean_image",
    "make_mask",
    "map_from_text",
    "map_to_heatmap_png",
    "map_to_text",
    "mask_fraction",
    "mask_from_png",
    "mask_to_png",
    "noise_weight",
    "pool_patches",
    "random_degrade_spec",
    "run_ablation",
    "run_eval",
    "run_pipeline",
    "score_cells",
    "split_patches",
    "stage1_noise",
    "stage2_inpaint",
    "stage3_enhance",
    "strength_blend",
    "to_luma",
]
