# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=False
"""Compiled kernels: the hot-loop twin of ``_kernels_py``.

Expression order matches the pure-Python module exactly so both backends
produce bit-identical doubles (enforced by tests/test_kernels.py).
"""

from libc.math cimport cos, sin, floor, INFINITY
from libc.stdlib cimport malloc, free

BACKEND = "c"

cdef double _PI = 3.141592653589793
cdef double _TWO_PI = 6.283185307179586


cdef inline double _wrap(double theta) nogil:
    return theta - _TWO_PI * floor((theta + _PI) / _TWO_PI)


def wrap_angle(double theta):
    """Wrap an angle to [-pi, pi) as theta - 2*pi*floor((theta + pi)/(2*pi))."""
    return _wrap(theta)


def rotation_matrix(double yaw, double pitch, double roll):
    """Row-major 9-tuple for the extrinsic Z-Y-X rotation Rz(yaw)Ry(pitch)Rx(roll)."""
    cdef double cy = cos(yaw)
    cdef double sy = sin(yaw)
    cdef double cp = cos(pitch)
    cdef double sp = sin(pitch)
    cdef double cr = cos(roll)
    cdef double sr = sin(roll)
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


def camera_frame_point(cam_r, double cam_x, double cam_y, double cam_z,
                       double px, double py, double pz):
    """World point -> camera frame (R^T @ (p - c)); +x is the viewing axis."""
    cdef double dx = px - cam_x
    cdef double dy = py - cam_y
    cdef double dz = pz - cam_z
    cdef double r00, r01, r02, r10, r11, r12, r20, r21, r22
    r00, r01, r02, r10, r11, r12, r20, r21, r22 = cam_r
    cdef double xc = r00 * dx + r10 * dy + r20 * dz
    cdef double yc = r01 * dx + r11 * dy + r21 * dz
    cdef double zc = r02 * dx + r12 * dy + r22 * dz
    return (xc, yc, zc)


cdef inline void _project(double r00, double r01, double r02,
                          double r10, double r11, double r12,
                          double r20, double r21, double r22,
                          double cam_x, double cam_y, double cam_z,
                          double focal, double cu, double cv,
                          double px, double py, double pz,
                          double* out_u, double* out_v, double* out_d) nogil:
    cdef double dx = px - cam_x
    cdef double dy = py - cam_y
    cdef double dz = pz - cam_z
    cdef double xc = r00 * dx + r10 * dy + r20 * dz
    cdef double yc = r01 * dx + r11 * dy + r21 * dz
    cdef double zc = r02 * dx + r12 * dy + r22 * dz
    if xc <= 0.0:
        out_u[0] = 0.0
        out_v[0] = 0.0
        out_d[0] = xc
        return
    out_u[0] = cu - focal * (yc / xc)
    out_v[0] = cv - focal * (zc / xc)
    out_d[0] = xc


def project_point_k(cam_r, double cam_x, double cam_y, double cam_z,
                    double focal, double cu, double cv,
                    double px, double py, double pz):
    """Pinhole projection; returns (u, v, depth) with depth the camera-frame x."""
    cdef double r00, r01, r02, r10, r11, r12, r20, r21, r22
    r00, r01, r02, r10, r11, r12, r20, r21, r22 = cam_r
    cdef double u = 0.0
    cdef double v = 0.0
    cdef double d = 0.0
    _project(r00, r01, r02, r10, r11, r12, r20, r21, r22,
             cam_x, cam_y, cam_z, focal, cu, cv, px, py, pz, &u, &v, &d)
    return (u, v, d)


cdef double[24] _CORNER_SIGNS = [
    -1.0, -1.0, -1.0,
    1.0, -1.0, -1.0,
    1.0, 1.0, -1.0,
    -1.0, 1.0, -1.0,
    -1.0, -1.0, 1.0,
    1.0, -1.0, 1.0,
    1.0, 1.0, 1.0,
    -1.0, 1.0, 1.0,
]


def project_cuboid_k(cam_r, double cam_x, double cam_y, double cam_z,
                     double focal, double cu, double cv,
                     obj_r, double obj_x, double obj_y, double obj_z,
                     double half_l, double half_w, double half_h):
    """Project the 8 hull corners.

    Returns (corners, bbox, min_depth) where corners is a 16-tuple of
    interleaved u, v values in the fixed corner order, bbox is
    (min_u, min_v, max_u, max_v) over the corners, and min_depth is the
    smallest camera-frame depth (callers reject min_depth <= 0).
    """
    cdef double r00, r01, r02, r10, r11, r12, r20, r21, r22
    cdef double o00, o01, o02, o10, o11, o12, o20, o21, o22
    r00, r01, r02, r10, r11, r12, r20, r21, r22 = cam_r
    o00, o01, o02, o10, o11, o12, o20, o21, o22 = obj_r
    cdef double[16] uv
    cdef double min_u = INFINITY
    cdef double min_v = INFINITY
    cdef double max_u = -INFINITY
    cdef double max_v = -INFINITY
    cdef double min_depth = INFINITY
    cdef double sx, sy_, sz, lx, ly, lz, wx, wy, wz, u, v, depth
    cdef int i
    for i in range(8):
        sx = _CORNER_SIGNS[3 * i]
        sy_ = _CORNER_SIGNS[3 * i + 1]
        sz = _CORNER_SIGNS[3 * i + 2]
        lx = sx * half_l
        ly = sy_ * half_w
        lz = sz * half_h
        wx = o00 * lx + o01 * ly + o02 * lz + obj_x
        wy = o10 * lx + o11 * ly + o12 * lz + obj_y
        wz = o20 * lx + o21 * ly + o22 * lz + obj_z
        u = 0.0
        v = 0.0
        depth = 0.0
        _project(r00, r01, r02, r10, r11, r12, r20, r21, r22,
                 cam_x, cam_y, cam_z, focal, cu, cv, wx, wy, wz, &u, &v, &depth)
        if depth < min_depth:
            min_depth = depth
        uv[2 * i] = u
        uv[2 * i + 1] = v
        if u < min_u:
            min_u = u
        if u > max_u:
            max_u = u
        if v < min_v:
            min_v = v
        if v > max_v:
            max_v = v
    corners = tuple([uv[i] for i in range(16)])
    return (corners, (min_u, min_v, max_u, max_v), min_depth)


def prior_support(int bin_count, double angle):
    """Nearest-6 soft assignment over equally spaced yaw bins.

    Returns (indices, weights): the 6 bin indices ordered by increasing
    circular distance (ties toward the lower index) and their triangular
    kernel weights, renormalized to sum to 1.
    """
    cdef double spacing = _TWO_PI / bin_count
    cdef double center, d, best_d, w
    cdef double half_width = 3.0 * spacing
    cdef double total = 0.0
    cdef double[6] raw
    cdef long[6] chosen
    cdef int k, j, best
    cdef double* dists = <double*> malloc(bin_count * sizeof(double))
    cdef char* used = <char*> malloc(bin_count * sizeof(char))
    if dists == NULL or used == NULL:
        if dists != NULL:
            free(dists)
        if used != NULL:
            free(used)
        raise MemoryError()
    try:
        for k in range(bin_count):
            # (k - n) * spacing on the upper half keeps mirrored centers exact
            # negations, so equidistant ties resolve exactly
            if 2 * k >= bin_count:
                center = (k - bin_count) * spacing
            else:
                center = k * spacing
            d = _wrap(angle - center)
            if d < 0.0:
                d = -d
            dists[k] = d
            used[k] = 0

        for j in range(6):
            best = -1
            best_d = INFINITY
            for k in range(bin_count):
                if not used[k] and dists[k] < best_d:
                    best = k
                    best_d = dists[k]
            used[best] = 1
            chosen[j] = best

        for j in range(6):
            w = 1.0 - dists[chosen[j]] / half_width
            if w < 0.0:
                w = 0.0
            raw[j] = w
            total += w
        weights = tuple([raw[j] / total for j in range(6)])
        indices = tuple([<long> chosen[j] for j in range(6)])
        return (indices, weights)
    finally:
        free(dists)
        free(used)
