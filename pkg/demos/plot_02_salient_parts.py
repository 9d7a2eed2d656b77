"""
Point features and salient parts
================================

Run an untrained DGCNN on one toy cloud, then look at which points the
salient-part step picks: the ones whose feature is closest, in angle, to the
max-pooled shape descriptor.
"""

import numpy as np
import torch

from pcia.backbone import DGCNN
from pcia.data.synthetic import primitive_cloud
from pcia.spf import SalientPartFusion, salient_parts

torch.manual_seed(0)
rng = np.random.default_rng(1)
cloud = torch.from_numpy(primitive_cloud("cone", 1.0, 512, rng).astype(np.float32))

backbone = DGCNN(widths=(32, 32, 64, 64), embed_dim=128, k=16).eval()
with torch.no_grad():
    fmap = backbone(cloud[None])[0]
print("feature map", tuple(fmap.shape))

###############################################################################
# Scores lie in [-1, 1]. The 32 highest give the part centers; each part is
# the center's 8 nearest neighbours in feature space.

parts = salient_parts(fmap, k_s=32, k=8)
scores = parts.scores[0]
print("score range", float(scores.min()), float(scores.max()))
centers = cloud[parts.selected[0]]
print("mean height of salient points", float(centers[:, 1].mean()), "vs cloud", float(cloud[:, 1].mean()))

###############################################################################
# Fusing the parts gives a descriptor of the same width as the feature map.

spf = SalientPartFusion(128, k_s=32, k=8).eval()
with torch.no_grad():
    print("fused descriptor", tuple(spf(fmap).shape))

###############################################################################
# Optional: save a picture of the salient points.
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ax = plt.figure(figsize=(4, 4)).add_subplot(projection="3d")
    ax.scatter(*cloud.numpy().T, s=2, c="lightgray")
    ax.scatter(*centers.numpy().T, s=12, c="crimson")
    plt.savefig("salient_points.png", dpi=100)
except ImportError:
    pass
