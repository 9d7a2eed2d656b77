"""Few-shot point cloud classification with salient-part fusion and cross-instance feature refinement."""

from .config import ExperimentConfig
from .model import FewShotNet, load_checkpoint, save_checkpoint

__version__ = "0.1.0"
