"""Object-level spatial calibration between two cooperating agents.

Detections from a cooperative agent are associated with the ego agent's
detections by comparing intra-agent geometric contexts, the relative pose is
refined by a robust SE(2) fit over the matched boxes, and both views are then
fused with NMS.
"""

from .context import DetectionSet, build_contexts, canonicalize_headings, to_ego_frame
from .estimator import CalibrationResult, RobustFitParams, calibrate, robust_fit_se2, weighted_procrustes_se2
from .fusion import FusionParams, fuse
from .geometry import ObjectBox, Pose2, RigidTransform2, compose, invert, relative_transform_from_poses
from .icp import icp_associate
from .kernels import BACKEND
from .matcher import MatchParams, MatchSet, associate
from .sim import NoiseConfig, ScenarioFrame, SuiteConfig, generate_frame, generate_suite

__version__ = "0.1.0"
