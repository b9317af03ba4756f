"""Shape classification from binary masks: skeleton-associated contour parts,
locality-constrained coding, pyramid pooling, and a linear multi-class SVM."""

from .classifier import SvmModel, predict, svm_objective, svm_subgradient, train
from .codebook import Codebook, kmeans, sample_training_descriptors
from .config import ExperimentConfig, load_config, parse_config
from .descriptor import (BinGeometry, ContourPart, dce_critical_points,
                         enumerate_parts, mirror_descriptor, part_descriptor,
                         ssc_histogram)
from .encoding import ShapeCode, flip_merge, llc_encode, llc_encode_batch, spm_pool
from .errors import (BscpError, CodebookError, ConfigError, DatasetError,
                     MaskError, ModelFormatError, SkeletonError)
from .evaluate import (EvaluationReport, render_report, run_half_split,
                       run_leave_one_out, sweep, train_full)
from .mask import (BinaryMask, Contour, load_mask, normalize_shape,
                   pca_major_axis_angle, trace_contour)
from .model_io import ModelBundle, build_bundle, load_model, save_model
from .pipeline import ShapeFeatures, encode_shape, extract_features, shape_vector
from .skeleton import (AssociatedContour, DistanceField, Skeleton,
                       associate_thickness, distance_transform, extract_skeleton,
                       generating_points)

__version__ = "0.1.0"
