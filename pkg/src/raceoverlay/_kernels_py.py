"""Pure-Python kernels: the fallback twin of the compiled extension.

Every function here must stay expression-for-expression identical to
``_kernels_c.pyx``.  Both backends run IEEE-754 double arithmetic through the
same libm, so matching expression order makes their outputs bit-identical;
``tests/test_kernels.py`` enforces that.
"""

from __future__ import annotations

import math

BACKEND = "python"

_PI = math.pi
_TWO_PI = math.tau


def wrap_angle(theta: float) -> float:
    """Wrap an angle to [-pi, pi) as theta - 2*pi*floor((theta + pi)/(2*pi))."""
    return theta - _TWO_PI * math.floor((theta + _PI) / _TWO_PI)


def rotation_matrix(yaw: float, pitch: float, roll: float) -> tuple:
    """Row-major 9-tuple for the extrinsic Z-Y-X rotation Rz(yaw)Ry(pitch)Rx(roll)."""
    cy = math.cos(yaw)
    sy = math.sin(yaw)
    cp = math.cos(pitch)
    sp = math.sin(pitch)
    cr = math.cos(roll)
    sr = math.sin(roll)
    return (
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )


def camera_frame_point(
    cam_r: tuple,
    cam_x: float,
    cam_y: float,
    cam_z: float,
    px: float,
    py: float,
    pz: float,
) -> tuple:
    """World point -> camera frame (R^T @ (p - c)); +x is the viewing axis."""
    dx = px - cam_x
    dy = py - cam_y
    dz = pz - cam_z
    r00, r01, r02, r10, r11, r12, r20, r21, r22 = cam_r
    xc = r00 * dx + r10 * dy + r20 * dz
    yc = r01 * dx + r11 * dy + r21 * dz
    zc = r02 * dx + r12 * dy + r22 * dz
    return (xc, yc, zc)


def project_point_k(
    cam_r: tuple,
    cam_x: float,
    cam_y: float,
    cam_z: float,
    focal: float,
    cu: float,
    cv: float,
    px: float,
    py: float,
    pz: float,
) -> tuple:
    """Pinhole projection; returns (u, v, depth) with depth the camera-frame x."""
    xc, yc, zc = camera_frame_point(cam_r, cam_x, cam_y, cam_z, px, py, pz)
    if xc <= 0.0:
        return (0.0, 0.0, xc)
    u = cu - focal * (yc / xc)
    v = cv - focal * (zc / xc)
    return (u, v, xc)


# Corner sign pattern over (length/2, width/2, height/2); fixed output order.
_CORNER_SIGNS = (
    (-1.0, -1.0, -1.0),
    (1.0, -1.0, -1.0),
    (1.0, 1.0, -1.0),
    (-1.0, 1.0, -1.0),
    (-1.0, -1.0, 1.0),
    (1.0, -1.0, 1.0),
    (1.0, 1.0, 1.0),
    (-1.0, 1.0, 1.0),
)


def project_cuboid_k(
    cam_r: tuple,
    cam_x: float,
    cam_y: float,
    cam_z: float,
    focal: float,
    cu: float,
    cv: float,
    obj_r: tuple,
    obj_x: float,
    obj_y: float,
    obj_z: float,
    half_l: float,
    half_w: float,
    half_h: float,
) -> tuple:
    """Project the 8 hull corners.

    Returns (corners, bbox, min_depth) where corners is a 16-tuple of
    interleaved u, v values in the fixed corner order, bbox is
    (min_u, min_v, max_u, max_v) over the corners, and min_depth is the
    smallest camera-frame depth (callers reject min_depth <= 0).
    """
    o00, o01, o02, o10, o11, o12, o20, o21, o22 = obj_r
    uv = []
    min_u = math.inf
    min_v = math.inf
    max_u = -math.inf
    max_v = -math.inf
    min_depth = math.inf
    for sx, sy_, sz in _CORNER_SIGNS:
        lx = sx * half_l
        ly = sy_ * half_w
        lz = sz * half_h
        wx = o00 * lx + o01 * ly + o02 * lz + obj_x
        wy = o10 * lx + o11 * ly + o12 * lz + obj_y
        wz = o20 * lx + o21 * ly + o22 * lz + obj_z
        u, v, depth = project_point_k(cam_r, cam_x, cam_y, cam_z, focal, cu, cv, wx, wy, wz)
        if depth < min_depth:
            min_depth = depth
        uv.append(u)
        uv.append(v)
        if u < min_u:
            min_u = u
        if u > max_u:
            max_u = u
        if v < min_v:
            min_v = v
        if v > max_v:
            max_v = v
    return (tuple(uv), (min_u, min_v, max_u, max_v), min_depth)


def prior_support(bin_count: int, angle: float) -> tuple:
    """Nearest-6 soft assignment over equally spaced yaw bins.

    Returns (indices, weights): the 6 bin indices ordered by increasing
    circular distance (ties toward the lower index) and their triangular
    kernel weights, renormalized to sum to 1.
    """
    spacing = _TWO_PI / bin_count
    dists = []
    for k in range(bin_count):
        # (k - n) * spacing on the upper half keeps mirrored centers exact
        # negations, so equidistant ties resolve exactly
        if 2 * k >= bin_count:
            center = (k - bin_count) * spacing
        else:
            center = k * spacing
        d = wrap_angle(angle - center)
        if d < 0.0:
            d = -d
        dists.append(d)

    chosen = []
    used = [False] * bin_count
    for _ in range(6):
        best = -1
        best_d = math.inf
        for k in range(bin_count):
            if not used[k] and dists[k] < best_d:
                best = k
                best_d = dists[k]
        used[best] = True
        chosen.append(best)

    half_width = 3.0 * spacing
    raw = []
    total = 0.0
    for k in chosen:
        w = 1.0 - dists[k] / half_width
        if w < 0.0:
            w = 0.0
        raw.append(w)
        total += w
    weights = tuple(w / total for w in raw)
    return (tuple(chosen), weights)
