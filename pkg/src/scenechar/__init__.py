"""Scene character recognition: robust PCA denoising, HOG features and
sparse-representation classification."""

__version__ = "0.1.0"

from scenechar.classify import (
    Dictionary,
    SparseCode,
    class_residuals,
    homotopy_l1,
    kkt_check,
    nn_classify,
    normalize_columns,
    src_classify,
)
from scenechar.hog import HogConfig, HogDescriptor, cell_histograms, gradients, hog_descriptor
from scenechar.image import GrayImage, load_image, resize_bilinear
from scenechar.matrix_ops import norms, soft_threshold, soft_threshold_matrix, svd, svt
from scenechar.rpca import RpcaConfig, RpcaResult, default_lambda, denoise_image, rpca_decompose
from scenechar.config import PipelineConfig, load_config
from scenechar.pipeline import CorpusManifest, EvalReport, build_dictionary, evaluate, read_manifest
from scenechar.synth import NoiseSpec, synth_corpus
