"""
Channel and instance interaction
================================

The two episode-level modules on random features: SCI+ starts as the
identity, CIF+ mixes prototypes and queries with convex weights.
"""

import torch

from pcia.cif_plus import CrossInstanceFusion, instance_fuse_branch
from pcia.sci_plus import SelfChannelInteraction

torch.manual_seed(0)
protos, queries = torch.randn(5, 64), torch.randn(75, 64)

sci = SelfChannelInteraction(n_way=5, h_r=32)
p, q = sci(protos, queries)
print("SCI+ identity at init:", torch.equal(p, protos) and torch.equal(q, queries))

# Once the compression map moves away from zero the block starts to act
torch.nn.init.normal_(sci.block.compress.weight, std=0.1)
with torch.no_grad():
    p, q = sci(protos, queries)
print("change after perturbing:", float((p - protos).abs().mean()))

###############################################################################
# Each lower-branch row is a softmax-weighted mixture of the other set, so it
# stays inside that set's bounding box.

mix = instance_fuse_branch(protos, queries)
print("inside query box:", bool(((mix <= queries.max(0).values) & (mix >= queries.min(0).values)).all()))

cif = CrossInstanceFusion(n_way=5, k1=3, h=32)
with torch.no_grad():
    p2, q2 = cif(protos, queries)
print("CIF+ shapes", tuple(p2.shape), tuple(q2.shape))

###############################################################################
# A query's refinement only looks at the prototypes, never at other queries.

q_alt = queries.clone()
q_alt[10] += 5.0
with torch.no_grad():
    _, q3 = cif(protos, q_alt)
print("other queries unchanged:", torch.equal(torch.cat([q2[:10], q2[11:]]), torch.cat([q3[:10], q3[11:]])))
