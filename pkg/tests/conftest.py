import math

import numpy as np
import pytest

from drivebench.geometry import OBB2


def obb_params_row(box: OBB2):
    return np.array([box.center[0], box.center[1], box.yaw,
                     box.half_extents[0], box.half_extents[1]])


def points_in_obb(points, box: OBB2):
    """Closed-rectangle membership, written independently of the kernels."""
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    dx = points[:, 0] - box.center[0]
    dy = points[:, 1] - box.center[1]
    lon = dx * c + dy * s
    lat = -dx * s + dy * c
    return (np.abs(lon) <= box.half_extents[0]) & (np.abs(lat) <= box.half_extents[1])


def mc_overlap(a: OBB2, b: OBB2, n_samples: int, rng) -> bool:
    """Monte-Carlo point-membership oracle.

    Samples uniformly in the intersection of the two axis-aligned hulls
    and reports whether any point lands inside both boxes.
    """
    ca, cb = a.corners(), b.corners()
    lo = np.maximum(ca.min(axis=0), cb.min(axis=0))
    hi = np.minimum(ca.max(axis=0), cb.max(axis=0))
    if (lo > hi).any():
        return False
    pts = rng.uniform(lo, hi, size=(n_samples, 2))
    return bool((points_in_obb(pts, a) & points_in_obb(pts, b)).any())


def sat_margin(a: OBB2, b: OBB2) -> float:
    """Largest axis gap over the 4 edge normals.

    Positive: a lower bound on the true separation distance. Negative:
    minus the smallest per-axis overlap (a penetration proxy).
    """
    margins = []
    for yaw in (a.yaw, a.yaw + math.pi / 2, b.yaw, b.yaw + math.pi / 2):
        lx, ly = math.cos(yaw), math.sin(yaw)
        ra = a.half_extents[0] * abs(math.cos(a.yaw) * lx + math.sin(a.yaw) * ly) \
            + a.half_extents[1] * abs(-math.sin(a.yaw) * lx + math.cos(a.yaw) * ly)
        rb = b.half_extents[0] * abs(math.cos(b.yaw) * lx + math.sin(b.yaw) * ly) \
            + b.half_extents[1] * abs(-math.sin(b.yaw) * lx + math.cos(b.yaw) * ly)
        t = abs((b.center[0] - a.center[0]) * lx + (b.center[1] - a.center[1]) * ly)
        margins.append(t - ra - rb)
    return max(margins)


def random_obb(rng, span=4.0, ext_lo=0.3, ext_hi=2.5) -> OBB2:
    return OBB2(
        center=(float(rng.uniform(-span, span)), float(rng.uniform(-span, span))),
        half_extents=(float(rng.uniform(ext_lo, ext_hi)),
                      float(rng.uniform(ext_lo, ext_hi))),
        yaw=float(rng.uniform(-math.pi, math.pi)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
