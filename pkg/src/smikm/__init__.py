"""Saliency-guided image retrieval with invariant Krawtchouk moment words."""

from .bovw import Vocabulary, quantize, train_vocabulary, word_histogram
from .config import Config, load_config, parse_config
from .features import DEFAULT_WEIGHTS, FeatureBundle, build_bundle, lbp_code_map, masked_histogram
from .harness import (
    DatasetManifest,
    EvalReport,
    build_index,
    bundle_for_image,
    evaluate_map,
    load_dataset,
    load_wang,
    run_pipeline,
)
from .imagecore import ImageBuf, PixelCoord, crop_patch, decode_image, read_image, rgb_to_hsv, to_grayscale
from .keypoints import Keypoint, detect_keypoints, extract_patches
from .moments import (
    MULTI_ORDER,
    SINGLE_ORDER,
    IkmDescriptor,
    geometric_moments,
    ikm_descriptor,
    invariant_context,
    krawtchouk_basis,
    weighted_image,
    weighted_krawtchouk_moments,
)
from .retrieval import RetrievalIndex, chi_square, fuse, load_index, query, save_index, zscore_normalize
from .saliency import RegionMasks, SaliencyMap, compute_saliency_hc, saliency_to_image, segment

__version__ = "0.1.0"
