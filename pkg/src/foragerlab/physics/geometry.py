"""Quaternion and box primitives shared by development and the solver.

Quaternions are stored (w, x, y, z).  Box orientation matrices map body
coordinates to world coordinates; half extents are half the block
dimensions along the body axes.
"""

from __future__ import annotations

import math

import numpy as np

from foragerlab.physics.jit import njit


@njit
def cross3(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit
def quat_normalize(q):
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    out = np.empty(4)
    if n < 1e-12:
        out[0] = 1.0
        out[1] = 0.0
        out[2] = 0.0
        out[3] = 0.0
        return out
    out[0] = q[0] / n
    out[1] = q[1] / n
    out[2] = q[2] / n
    out[3] = q[3] / n
    return out


@njit
def quat_mul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@njit
def quat_conj(q):
    out = np.empty(4)
    out[0] = q[0]
    out[1] = -q[1]
    out[2] = -q[2]
    out[3] = -q[3]
    return out


@njit
def quat_from_axis_angle(axis, angle):
    half = 0.5 * angle
    s = math.sin(half)
    out = np.empty(4)
    out[0] = math.cos(half)
    out[1] = axis[0] * s
    out[2] = axis[1] * s
    out[3] = axis[2] * s
    return out


@njit
def quat_to_mat(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    m = np.empty((3, 3))
    m[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[0, 1] = 2.0 * (x * y - w * z)
    m[0, 2] = 2.0 * (x * z + w * y)
    m[1, 0] = 2.0 * (x * y + w * z)
    m[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[1, 2] = 2.0 * (y * z - w * x)
    m[2, 0] = 2.0 * (x * z - w * y)
    m[2, 1] = 2.0 * (y * z + w * x)
    m[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


@njit
def mat_vec(m, v):
    out = np.empty(3)
    out[0] = m[0, 0] * v[0] + m[0, 1] * v[1] + m[0, 2] * v[2]
    out[1] = m[1, 0] * v[0] + m[1, 1] * v[1] + m[1, 2] * v[2]
    out[2] = m[2, 0] * v[0] + m[2, 1] * v[1] + m[2, 2] * v[2]
    return out


@njit
def mat_tvec(m, v):
    """Multiply by the matrix transpose (world -> body)."""
    out = np.empty(3)
    out[0] = m[0, 0] * v[0] + m[1, 0] * v[1] + m[2, 0] * v[2]
    out[1] = m[0, 1] * v[0] + m[1, 1] * v[1] + m[2, 1] * v[2]
    out[2] = m[0, 2] * v[0] + m[1, 2] * v[1] + m[2, 2] * v[2]
    return out


@njit
def box_vertices(center, rot, half):
    verts = np.empty((8, 3))
    for i in range(8):
        sx = -1.0 + 2.0 * ((i >> 2) & 1)
        sy = -1.0 + 2.0 * ((i >> 1) & 1)
        sz = -1.0 + 2.0 * (i & 1)
        bx = sx * half[0]
        by = sy * half[1]
        bz = sz * half[2]
        for k in range(3):
            verts[i, k] = center[k] + rot[k, 0] * bx + rot[k, 1] * by + rot[k, 2] * bz
    return verts


@njit
def box_inv_inertia_diag(mass, half):
    """Inverse of the diagonal body-frame inertia of a solid box."""
    dx = 2.0 * half[0]
    dy = 2.0 * half[1]
    dz = 2.0 * half[2]
    out = np.empty(3)
    out[0] = 12.0 / (mass * (dy * dy + dz * dz))
    out[1] = 12.0 / (mass * (dx * dx + dz * dz))
    out[2] = 12.0 / (mass * (dx * dx + dy * dy))
    return out


@njit
def obb_overlap(ca, ra, ha, cb, rb, hb):
    """Separating-axis test for two oriented boxes (True when overlapping)."""
    eps = 1e-9
    r = np.empty((3, 3))
    absr = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            s = ra[0, i] * rb[0, j] + ra[1, i] * rb[1, j] + ra[2, i] * rb[2, j]
            r[i, j] = s
            absr[i, j] = abs(s) + eps
    d = np.empty(3)
    for k in range(3):
        d[k] = cb[k] - ca[k]
    t = np.empty(3)
    for i in range(3):
        t[i] = ra[0, i] * d[0] + ra[1, i] * d[1] + ra[2, i] * d[2]

    # Face axes of A
    for i in range(3):
        rad_a = ha[i]
        rad_b = hb[0] * absr[i, 0] + hb[1] * absr[i, 1] + hb[2] * absr[i, 2]
        if abs(t[i]) > rad_a + rad_b:
            return False
    # Face axes of B
    for j in range(3):
        rad_a = ha[0] * absr[0, j] + ha[1] * absr[1, j] + ha[2] * absr[2, j]
        rad_b = hb[j]
        proj = abs(t[0] * r[0, j] + t[1] * r[1, j] + t[2] * r[2, j])
        if proj > rad_a + rad_b:
            return False
    # Edge-edge axes
    for i in range(3):
        i1 = (i + 1) % 3
        i2 = (i + 2) % 3
        for j in range(3):
            j1 = (j + 1) % 3
            j2 = (j + 2) % 3
            rad_a = ha[i1] * absr[i2, j] + ha[i2] * absr[i1, j]
            rad_b = hb[j1] * absr[i, j2] + hb[j2] * absr[i, j1]
            proj = abs(t[i2] * r[i1, j] - t[i1] * r[i2, j])
            if proj > rad_a + rad_b:
                return False
    return True


@njit
def tangent_basis(n):
    """Deterministic orthonormal pair perpendicular to unit vector n."""
    t1 = np.empty(3)
    if abs(n[0]) >= 0.57735:
        t1[0] = n[1]
        t1[1] = -n[0]
        t1[2] = 0.0
    else:
        t1[0] = 0.0
        t1[1] = n[2]
        t1[2] = -n[1]
    ln = math.sqrt(t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2])
    t1[0] /= ln
    t1[1] /= ln
    t1[2] /= ln
    t2 = cross3(n, t1)
    return t1, t2


@njit
def twist_angle(q_parent, q_child, axis_local):
    """Signed hinge angle of child relative to parent about the joint axis.

    Extracts the twist component of the relative rotation; result lies in
    (-pi, pi].
    """
    rel = quat_mul(quat_conj(q_parent), q_child)
    if rel[0] < 0.0:
        rel = -rel
    dot = rel[1] * axis_local[0] + rel[2] * axis_local[1] + rel[3] * axis_local[2]
    angle = 2.0 * math.atan2(dot, rel[0])
    if angle > math.pi:
        angle -= 2.0 * math.pi
    elif angle <= -math.pi:
        angle += 2.0 * math.pi
    return angle
