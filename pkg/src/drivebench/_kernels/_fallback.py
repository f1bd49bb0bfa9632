"""Pure numpy implementations of the collision kernels.

Mirrors _core.pyx exactly: same box layout (cx, cy, yaw, half_len,
half_wid), same closed-rectangle semantics.
"""

import numpy as np


def _separated(a, b):
    """Vectorized SAT over the 4 edge normals; a, b are (N, 5) arrays."""
    ca, sa = np.cos(a[:, 2]), np.sin(a[:, 2])
    cb, sb = np.cos(b[:, 2]), np.sin(b[:, 2])
    tx = b[:, 0] - a[:, 0]
    ty = b[:, 1] - a[:, 1]
    # axes: (N, 4, 2) — two edge normals per rectangle
    lx = np.stack([ca, -sa, cb, -sb], axis=1)
    ly = np.stack([sa, ca, sb, cb], axis=1)
    ra = (a[:, 3, None] * np.abs(ca[:, None] * lx + sa[:, None] * ly)
          + a[:, 4, None] * np.abs(-sa[:, None] * lx + ca[:, None] * ly))
    rb = (b[:, 3, None] * np.abs(cb[:, None] * lx + sb[:, None] * ly)
          + b[:, 4, None] * np.abs(-sb[:, None] * lx + cb[:, None] * ly))
    gap = np.abs(tx[:, None] * lx + ty[:, None] * ly)
    return (gap > ra + rb).any(axis=1)


def obb_overlap(ax, ay, ayaw, ahl, ahw, bx, by, byaw, bhl, bhw):
    a = np.array([[ax, ay, ayaw, ahl, ahw]], dtype=np.float64)
    b = np.array([[bx, by, byaw, bhl, bhw]], dtype=np.float64)
    return bool(~_separated(a, b)[0])


def overlap_mask(a, b):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    return (~_separated(a, b)).astype(np.uint8)


def plan_collides(ego, agents):
    ego = np.asarray(ego, dtype=np.float64)
    agents = np.asarray(agents, dtype=np.float64)
    if agents.shape[0] == 0:
        return False
    ego_tiled = np.broadcast_to(ego, agents.shape).reshape(-1, 5)
    flat = agents.reshape(-1, 5)
    return bool(overlap_mask(ego_tiled, flat).any())
