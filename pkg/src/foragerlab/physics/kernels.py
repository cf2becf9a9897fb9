"""Solver kernels for the reduced-fidelity rigid-body world.

One step is: half gravity kick, velocity constraint solve (fixed
iteration count, fixed ordering), position drift, second half kick,
ground backstop.  Splitting the gravity kick around the drift makes
free fall of an unconstrained body match the closed-form ballistic arc
exactly, while contacts still see the gravity-loaded velocity.

Ground contacts are speculative: a contact row bounds the approach speed
so the vertex lands on the surface instead of tunnelling through it.
Box-box contacts between non-adjacent blocks use penetration push-out.
Hinges are solved as a 3x3 anchor block, two axis-alignment rows, a
torque-capped motor row and one-sided limit rows.

Everything is plain numpy driven by loops so numba can compile it; with
numba disabled the same code runs in Python.
"""

from __future__ import annotations

import math

import numpy as np

from foragerlab.physics.jit import njit
from foragerlab.physics import params
from foragerlab.physics.geometry import (
    box_vertices, quat_mul, quat_normalize, quat_to_mat, tangent_basis,
    twist_angle,
)

# forward declaration order: obb_overlap_mats is defined below tick() but
# resolved at first call, after the module has fully loaded
from foragerlab.controller import controller_tick, motor_commands

_G = params.GRAVITY
_MU = params.FRICTION_MU
_ITERS = params.SOLVER_ITERATIONS
_SLOP = params.CONTACT_SLOP
_PSLOP = params.PENETRATION_SLOP
_BETA_C = params.BAUMGARTE_CONTACT
_BETA_J = params.BAUMGARTE_JOINT
_MAX_SPEED = params.MAX_BODY_SPEED
_MAX_JOINT_SPEED = params.MAX_JOINT_SPEED
_CANDIDATE_BAND = 0.05   # vertices this close to the ground become contact rows
_TOUCH_BAND = 0.005      # separation below this reads as "touching"

EXIT_RAN_OUT = 0
EXIT_ABSORBED = 1
EXIT_UNSTABLE = 2


@njit
def _inv3(m):
    c00 = m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    c01 = m[1, 2] * m[2, 0] - m[1, 0] * m[2, 2]
    c02 = m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]
    det = m[0, 0] * c00 + m[0, 1] * c01 + m[0, 2] * c02
    if abs(det) < 1e-12:
        det = 1e-12
    inv = np.empty((3, 3))
    inv[0, 0] = c00 / det
    inv[1, 0] = c01 / det
    inv[2, 0] = c02 / det
    inv[0, 1] = (m[0, 2] * m[2, 1] - m[0, 1] * m[2, 2]) / det
    inv[1, 1] = (m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]) / det
    inv[2, 1] = (m[0, 1] * m[2, 0] - m[0, 0] * m[2, 1]) / det
    inv[0, 2] = (m[0, 1] * m[1, 2] - m[0, 2] * m[1, 1]) / det
    inv[1, 2] = (m[0, 2] * m[1, 0] - m[0, 0] * m[1, 2]) / det
    inv[2, 2] = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) / det
    return inv


@njit
def _world_inv_inertia(rot, inv_ib):
    """R diag(inv_ib) R^T for one body."""
    out = np.empty((3, 3))
    for r in range(3):
        for c in range(3):
            s = 0.0
            for k in range(3):
                s += rot[r, k] * inv_ib[k] * rot[c, k]
            out[r, c] = s
    return out


@njit
def _apply_impulse(vel, omg, inv_m, iiw, i, r, px, py, pz):
    vel[i, 0] += inv_m[i] * px
    vel[i, 1] += inv_m[i] * py
    vel[i, 2] += inv_m[i] * pz
    tx = r[1] * pz - r[2] * py
    ty = r[2] * px - r[0] * pz
    tz = r[0] * py - r[1] * px
    omg[i, 0] += iiw[i, 0, 0] * tx + iiw[i, 0, 1] * ty + iiw[i, 0, 2] * tz
    omg[i, 1] += iiw[i, 1, 0] * tx + iiw[i, 1, 1] * ty + iiw[i, 1, 2] * tz
    omg[i, 2] += iiw[i, 2, 0] * tx + iiw[i, 2, 1] * ty + iiw[i, 2, 2] * tz


@njit
def _point_velocity(vel, omg, i, r):
    out = np.empty(3)
    out[0] = vel[i, 0] + omg[i, 1] * r[2] - omg[i, 2] * r[1]
    out[1] = vel[i, 1] + omg[i, 2] * r[0] - omg[i, 0] * r[2]
    out[2] = vel[i, 2] + omg[i, 0] * r[1] - omg[i, 1] * r[0]
    return out


@njit
def _row_k(inv_m, iiw, i, r, axis):
    """Effective mass term of one body for a contact-style row."""
    cx = r[1] * axis[2] - r[2] * axis[1]
    cy = r[2] * axis[0] - r[0] * axis[2]
    cz = r[0] * axis[1] - r[1] * axis[0]
    gx = iiw[i, 0, 0] * cx + iiw[i, 0, 1] * cy + iiw[i, 0, 2] * cz
    gy = iiw[i, 1, 0] * cx + iiw[i, 1, 1] * cy + iiw[i, 1, 2] * cz
    gz = iiw[i, 2, 0] * cx + iiw[i, 2, 1] * cy + iiw[i, 2, 2] * cz
    return inv_m[i] + cx * gx + cy * gy + cz * gz


@njit
def _ang_k(iiw, i, axis):
    gx = iiw[i, 0, 0] * axis[0] + iiw[i, 0, 1] * axis[1] + iiw[i, 0, 2] * axis[2]
    gy = iiw[i, 1, 0] * axis[0] + iiw[i, 1, 1] * axis[1] + iiw[i, 1, 2] * axis[2]
    gz = iiw[i, 2, 0] * axis[0] + iiw[i, 2, 1] * axis[1] + iiw[i, 2, 2] * axis[2]
    return axis[0] * gx + axis[1] * gy + axis[2] * gz


@njit
def _apply_ang_impulse(omg, iiw, i, axis, lam):
    omg[i, 0] += (iiw[i, 0, 0] * axis[0] + iiw[i, 0, 1] * axis[1] + iiw[i, 0, 2] * axis[2]) * lam
    omg[i, 1] += (iiw[i, 1, 0] * axis[0] + iiw[i, 1, 1] * axis[1] + iiw[i, 1, 2] * axis[2]) * lam
    omg[i, 2] += (iiw[i, 2, 0] * axis[0] + iiw[i, 2, 1] * axis[1] + iiw[i, 2, 2] * axis[2]) * lam


@njit
def tick(pos, quat, vel, omg, inv_m, inv_ib, half, collide,
         jp, jc, jap, jac, jax, jlo, jhi, jtorq, has_motor,
         commands, motors_on, dt, touch):
    """Advance the world by one step.  Returns 0, or 2 when unstable."""
    n = pos.shape[0]
    m = jp.shape[0]

    for i in range(n):
        vel[i, 2] -= 0.5 * _G * dt

    rot = np.empty((n, 3, 3))
    iiw = np.empty((n, 3, 3))
    for i in range(n):
        rot[i] = quat_to_mat(quat[i])
        iiw[i] = _world_inv_inertia(rot[i], inv_ib[i])

    # --- contact generation -------------------------------------------------
    cap = 8 * n + 16 * (n * (n - 1)) // 2 + 8
    ct_a = np.empty(cap, np.int64)       # -1 means the ground plane
    ct_b = np.empty(cap, np.int64)
    ct_ra = np.empty((cap, 3))
    ct_rb = np.empty((cap, 3))
    ct_n = np.empty((cap, 3))
    ct_sep = np.empty(cap)
    nct = 0

    for i in range(n):
        verts = box_vertices(pos[i], rot[i], half[i])
        for k in range(8):
            z = verts[k, 2]
            rx = verts[k, 0] - pos[i, 0]
            ry = verts[k, 1] - pos[i, 1]
            vpz = vel[i, 2] + omg[i, 0] * ry - omg[i, 1] * rx
            if z < _CANDIDATE_BAND or z + vpz * dt < _CANDIDATE_BAND:
                ct_a[nct] = -1
                ct_b[nct] = i
                ct_rb[nct, 0] = rx
                ct_rb[nct, 1] = ry
                ct_rb[nct, 2] = verts[k, 2] - pos[i, 2]
                ct_n[nct, 0] = 0.0
                ct_n[nct, 1] = 0.0
                ct_n[nct, 2] = 1.0
                ct_sep[nct] = z
                nct += 1

    for i in range(n):
        for j in range(i + 1, n):
            if collide[i, j] == 0:
                continue
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            dz = pos[j, 2] - pos[i, 2]
            ri = math.sqrt(half[i, 0] ** 2 + half[i, 1] ** 2 + half[i, 2] ** 2)
            rj = math.sqrt(half[j, 0] ** 2 + half[j, 1] ** 2 + half[j, 2] ** 2)
            if dx * dx + dy * dy + dz * dz > (ri + rj) * (ri + rj):
                continue
            if not obb_overlap_mats(pos[i], rot[i], half[i], pos[j], rot[j], half[j]):
                continue
            for which in range(2):
                a = i if which == 0 else j
                b = j if which == 0 else i
                vb = box_vertices(pos[b], rot[b], half[b])
                for k in range(8):
                    wx = vb[k, 0] - pos[a, 0]
                    wy = vb[k, 1] - pos[a, 1]
                    wz = vb[k, 2] - pos[a, 2]
                    lx = rot[a, 0, 0] * wx + rot[a, 1, 0] * wy + rot[a, 2, 0] * wz
                    ly = rot[a, 0, 1] * wx + rot[a, 1, 1] * wy + rot[a, 2, 1] * wz
                    lz = rot[a, 0, 2] * wx + rot[a, 1, 2] * wy + rot[a, 2, 2] * wz
                    if (abs(lx) <= half[a, 0] + 0.002 and
                            abs(ly) <= half[a, 1] + 0.002 and
                            abs(lz) <= half[a, 2] + 0.002):
                        d0 = half[a, 0] - abs(lx)
                        d1 = half[a, 1] - abs(ly)
                        d2 = half[a, 2] - abs(lz)
                        best = 0
                        depth = d0
                        if d1 < depth:
                            best = 1
                            depth = d1
                        if d2 < depth:
                            best = 2
                            depth = d2
                        sgn = 1.0
                        if best == 0 and lx < 0.0:
                            sgn = -1.0
                        elif best == 1 and ly < 0.0:
                            sgn = -1.0
                        elif best == 2 and lz < 0.0:
                            sgn = -1.0
                        if nct < cap:
                            ct_a[nct] = a
                            ct_b[nct] = b
                            for c in range(3):
                                ct_n[nct, c] = sgn * rot[a, c, best]
                            ct_ra[nct, 0] = wx
                            ct_ra[nct, 1] = wy
                            ct_ra[nct, 2] = wz
                            ct_rb[nct, 0] = vb[k, 0] - pos[b, 0]
                            ct_rb[nct, 1] = vb[k, 1] - pos[b, 1]
                            ct_rb[nct, 2] = vb[k, 2] - pos[b, 2]
                            ct_sep[nct] = -depth
                            nct += 1

    # per-contact precomputation
    ct_t1 = np.empty((nct, 3))
    ct_t2 = np.empty((nct, 3))
    ct_kn = np.empty(nct)
    ct_kt1 = np.empty(nct)
    ct_kt2 = np.empty(nct)
    ct_target = np.empty(nct)
    ct_ln = np.zeros(nct)
    ct_lt1 = np.zeros(nct)
    ct_lt2 = np.zeros(nct)
    for c in range(nct):
        nvec = ct_n[c]
        t1, t2 = tangent_basis(nvec)
        ct_t1[c] = t1
        ct_t2[c] = t2
        kn = _row_k(inv_m, iiw, ct_b[c], ct_rb[c], nvec)
        k1 = _row_k(inv_m, iiw, ct_b[c], ct_rb[c], t1)
        k2 = _row_k(inv_m, iiw, ct_b[c], ct_rb[c], t2)
        if ct_a[c] >= 0:
            kn += _row_k(inv_m, iiw, ct_a[c], ct_ra[c], nvec)
            k1 += _row_k(inv_m, iiw, ct_a[c], ct_ra[c], t1)
            k2 += _row_k(inv_m, iiw, ct_a[c], ct_ra[c], t2)
        ct_kn[c] = kn if kn > 1e-12 else 1e-12
        ct_kt1[c] = k1 if k1 > 1e-12 else 1e-12
        ct_kt2[c] = k2 if k2 > 1e-12 else 1e-12
        s = ct_sep[c]
        if s > _SLOP:
            ct_target[c] = -(s - _SLOP) / dt
        else:
            push = -s - _PSLOP
            if push > 0.0:
                ct_target[c] = _BETA_C * push / dt
            else:
                ct_target[c] = 0.0

    # per-joint precomputation
    j_rp = np.empty((m, 3))
    j_rc = np.empty((m, 3))
    j_kinv = np.empty((m, 3, 3))
    j_axis_w = np.empty((m, 3))
    j_u1 = np.empty((m, 3))
    j_u2 = np.empty((m, 3))
    j_bias = np.empty((m, 3))
    j_align1 = np.empty(m)
    j_align2 = np.empty(m)
    j_ka1 = np.empty(m)
    j_ka2 = np.empty(m)
    j_km = np.empty(m)
    j_angle = np.empty(m)
    j_macc = np.zeros(m)
    j_lacc_lo = np.zeros(m)
    j_lacc_hi = np.zeros(m)
    for j in range(m):
        p = jp[j]
        c = jc[j]
        for k in range(3):
            j_rp[j, k] = (rot[p, k, 0] * jap[j, 0] + rot[p, k, 1] * jap[j, 1]
                          + rot[p, k, 2] * jap[j, 2])
            j_rc[j, k] = (rot[c, k, 0] * jac[j, 0] + rot[c, k, 1] * jac[j, 1]
                          + rot[c, k, 2] * jac[j, 2])
        kmat = np.zeros((3, 3))
        im = inv_m[p] + inv_m[c]
        for k in range(3):
            kmat[k, k] = im
        # kmat -= skew(rp) iiw_p skew(rp) + skew(rc) iiw_c skew(rc)
        for body in range(2):
            bi = p if body == 0 else c
            r = j_rp[j] if body == 0 else j_rc[j]
            sk = np.empty((3, 3))
            sk[0, 0] = 0.0
            sk[0, 1] = -r[2]
            sk[0, 2] = r[1]
            sk[1, 0] = r[2]
            sk[1, 1] = 0.0
            sk[1, 2] = -r[0]
            sk[2, 0] = -r[1]
            sk[2, 1] = r[0]
            sk[2, 2] = 0.0
            tmp = np.empty((3, 3))
            for rr in range(3):
                for cc in range(3):
                    s = 0.0
                    for kk in range(3):
                        s += sk[rr, kk] * iiw[bi, kk, cc]
                    tmp[rr, cc] = s
            for rr in range(3):
                for cc in range(3):
                    s = 0.0
                    for kk in range(3):
                        s += tmp[rr, kk] * sk[cc, kk]  # times skew^T
                    kmat[rr, cc] += s
        j_kinv[j] = _inv3(kmat)

        aw = np.empty(3)
        cw = np.empty(3)
        for k in range(3):
            aw[k] = (rot[p, k, 0] * jax[j, 0] + rot[p, k, 1] * jax[j, 1]
                     + rot[p, k, 2] * jax[j, 2])
            cw[k] = (rot[c, k, 0] * jax[j, 0] + rot[c, k, 1] * jax[j, 1]
                     + rot[c, k, 2] * jax[j, 2])
        j_axis_w[j] = aw
        u1, u2 = tangent_basis(aw)
        j_u1[j] = u1
        j_u2[j] = u2
        # rotation that carries the child's axis onto the parent's
        ex = cw[1] * aw[2] - cw[2] * aw[1]
        ey = cw[2] * aw[0] - cw[0] * aw[2]
        ez = cw[0] * aw[1] - cw[1] * aw[0]
        j_align1[j] = (_BETA_J / dt) * (ex * u1[0] + ey * u1[1] + ez * u1[2])
        j_align2[j] = (_BETA_J / dt) * (ex * u2[0] + ey * u2[1] + ez * u2[2])
        j_ka1[j] = max(_ang_k(iiw, p, u1) + _ang_k(iiw, c, u1), 1e-12)
        j_ka2[j] = max(_ang_k(iiw, p, u2) + _ang_k(iiw, c, u2), 1e-12)
        j_km[j] = max(_ang_k(iiw, p, aw) + _ang_k(iiw, c, aw), 1e-12)
        for k in range(3):
            ep = (pos[c, k] + j_rc[j, k]) - (pos[p, k] + j_rp[j, k])
            j_bias[j, k] = -(_BETA_J / dt) * ep
        j_angle[j] = twist_angle(quat[p], quat[c], jax[j])

    # --- velocity solve -----------------------------------------------------
    for _ in range(_ITERS):
        for j in range(m):
            p = jp[j]
            c = jc[j]
            vp = _point_velocity(vel, omg, p, j_rp[j])
            vc = _point_velocity(vel, omg, c, j_rc[j])
            rhs = np.empty(3)
            for k in range(3):
                rhs[k] = j_bias[j, k] - (vc[k] - vp[k])
            px = j_kinv[j, 0, 0] * rhs[0] + j_kinv[j, 0, 1] * rhs[1] + j_kinv[j, 0, 2] * rhs[2]
            py = j_kinv[j, 1, 0] * rhs[0] + j_kinv[j, 1, 1] * rhs[1] + j_kinv[j, 1, 2] * rhs[2]
            pz = j_kinv[j, 2, 0] * rhs[0] + j_kinv[j, 2, 1] * rhs[1] + j_kinv[j, 2, 2] * rhs[2]
            _apply_impulse(vel, omg, inv_m, iiw, c, j_rc[j], px, py, pz)
            _apply_impulse(vel, omg, inv_m, iiw, p, j_rp[j], -px, -py, -pz)

            for row in range(2):
                u = j_u1[j] if row == 0 else j_u2[j]
                bias = j_align1[j] if row == 0 else j_align2[j]
                ku = j_ka1[j] if row == 0 else j_ka2[j]
                wrel = ((omg[c, 0] - omg[p, 0]) * u[0]
                        + (omg[c, 1] - omg[p, 1]) * u[1]
                        + (omg[c, 2] - omg[p, 2]) * u[2])
                lam = (bias - wrel) / ku
                _apply_ang_impulse(omg, iiw, c, u, lam)
                _apply_ang_impulse(omg, iiw, p, u, -lam)

            aw = j_axis_w[j]
            if motors_on and has_motor[j]:
                wrel = ((omg[c, 0] - omg[p, 0]) * aw[0]
                        + (omg[c, 1] - omg[p, 1]) * aw[1]
                        + (omg[c, 2] - omg[p, 2]) * aw[2])
                target = commands[j] * _MAX_JOINT_SPEED
                lam = (target - wrel) / j_km[j]
                cap_imp = jtorq[j] * dt
                new_acc = j_macc[j] + lam
                if new_acc > cap_imp:
                    new_acc = cap_imp
                elif new_acc < -cap_imp:
                    new_acc = -cap_imp
                dlam = new_acc - j_macc[j]
                j_macc[j] = new_acc
                _apply_ang_impulse(omg, iiw, c, aw, dlam)
                _apply_ang_impulse(omg, iiw, p, aw, -dlam)

            theta = j_angle[j]
            if theta < jlo[j]:
                wrel = ((omg[c, 0] - omg[p, 0]) * aw[0]
                        + (omg[c, 1] - omg[p, 1]) * aw[1]
                        + (omg[c, 2] - omg[p, 2]) * aw[2])
                target = (_BETA_J / dt) * (jlo[j] - theta)
                lam = (target - wrel) / j_km[j]
                new_acc = j_lacc_lo[j] + lam
                if new_acc < 0.0:
                    new_acc = 0.0
                dlam = new_acc - j_lacc_lo[j]
                j_lacc_lo[j] = new_acc
                _apply_ang_impulse(omg, iiw, c, aw, dlam)
                _apply_ang_impulse(omg, iiw, p, aw, -dlam)
            elif theta > jhi[j]:
                wrel = ((omg[c, 0] - omg[p, 0]) * aw[0]
                        + (omg[c, 1] - omg[p, 1]) * aw[1]
                        + (omg[c, 2] - omg[p, 2]) * aw[2])
                target = (_BETA_J / dt) * (jhi[j] - theta)
                lam = (target - wrel) / j_km[j]
                new_acc = j_lacc_hi[j] + lam
                if new_acc > 0.0:
                    new_acc = 0.0
                dlam = new_acc - j_lacc_hi[j]
                j_lacc_hi[j] = new_acc
                _apply_ang_impulse(omg, iiw, c, aw, dlam)
                _apply_ang_impulse(omg, iiw, p, aw, -dlam)

        for c in range(nct):
            b = ct_b[c]
            a = ct_a[c]
            nvec = ct_n[c]
            vb = _point_velocity(vel, omg, b, ct_rb[c])
            if a >= 0:
                va = _point_velocity(vel, omg, a, ct_ra[c])
                vn = ((vb[0] - va[0]) * nvec[0] + (vb[1] - va[1]) * nvec[1]
                      + (vb[2] - va[2]) * nvec[2])
            else:
                vn = vb[0] * nvec[0] + vb[1] * nvec[1] + vb[2] * nvec[2]
            lam = (ct_target[c] - vn) / ct_kn[c]
            new_acc = ct_ln[c] + lam
            if new_acc < 0.0:
                new_acc = 0.0
            dlam = new_acc - ct_ln[c]
            ct_ln[c] = new_acc
            if dlam != 0.0:
                _apply_impulse(vel, omg, inv_m, iiw, b, ct_rb[c],
                               dlam * nvec[0], dlam * nvec[1], dlam * nvec[2])
                if a >= 0:
                    _apply_impulse(vel, omg, inv_m, iiw, a, ct_ra[c],
                                   -dlam * nvec[0], -dlam * nvec[1], -dlam * nvec[2])

            lim = _MU * ct_ln[c]
            for trow in range(2):
                tvec = ct_t1[c] if trow == 0 else ct_t2[c]
                kt = ct_kt1[c] if trow == 0 else ct_kt2[c]
                vb = _point_velocity(vel, omg, b, ct_rb[c])
                if a >= 0:
                    va = _point_velocity(vel, omg, a, ct_ra[c])
                    vt = ((vb[0] - va[0]) * tvec[0] + (vb[1] - va[1]) * tvec[1]
                          + (vb[2] - va[2]) * tvec[2])
                else:
                    vt = vb[0] * tvec[0] + vb[1] * tvec[1] + vb[2] * tvec[2]
                lam = -vt / kt
                acc = ct_lt1[c] if trow == 0 else ct_lt2[c]
                new_acc = acc + lam
                if new_acc > lim:
                    new_acc = lim
                elif new_acc < -lim:
                    new_acc = -lim
                dlam = new_acc - acc
                if trow == 0:
                    ct_lt1[c] = new_acc
                else:
                    ct_lt2[c] = new_acc
                if dlam != 0.0:
                    _apply_impulse(vel, omg, inv_m, iiw, b, ct_rb[c],
                                   dlam * tvec[0], dlam * tvec[1], dlam * tvec[2])
                    if a >= 0:
                        _apply_impulse(vel, omg, inv_m, iiw, a, ct_ra[c],
                                       -dlam * tvec[0], -dlam * tvec[1], -dlam * tvec[2])

    # --- integrate ----------------------------------------------------------
    for i in range(n):
        pos[i, 0] += vel[i, 0] * dt
        pos[i, 1] += vel[i, 1] * dt
        pos[i, 2] += vel[i, 2] * dt
        wq = np.empty(4)
        wq[0] = 0.0
        wq[1] = omg[i, 0]
        wq[2] = omg[i, 1]
        wq[3] = omg[i, 2]
        dq = quat_mul(wq, quat[i])
        q = np.empty(4)
        for k in range(4):
            q[k] = quat[i, k] + 0.5 * dt * dq[k]
        quat[i] = quat_normalize(q)

    for i in range(n):
        vel[i, 2] -= 0.5 * _G * dt

    # ground backstop: hard non-penetration for the lowest vertex
    for i in range(n):
        rm = quat_to_mat(quat[i])
        verts = box_vertices(pos[i], rm, half[i])
        minz = verts[0, 2]
        for k in range(1, 8):
            if verts[k, 2] < minz:
                minz = verts[k, 2]
        if minz < 0.0:
            pos[i, 2] -= minz

    # touch flags from this step's contact set
    for i in range(n):
        touch[i] = 0.0
    for c in range(nct):
        if ct_sep[c] <= _TOUCH_BAND:
            touch[ct_b[c]] = 1.0
            if ct_a[c] >= 0:
                touch[ct_a[c]] = 1.0

    # stability
    for i in range(n):
        sp = 0.0
        for k in range(3):
            if not math.isfinite(pos[i, k]) or not math.isfinite(vel[i, k]) \
                    or not math.isfinite(omg[i, k]):
                return EXIT_UNSTABLE
            sp += vel[i, k] * vel[i, k]
        if not math.isfinite(quat[i, 0]):
            return EXIT_UNSTABLE
        if sp > _MAX_SPEED * _MAX_SPEED:
            return EXIT_UNSTABLE
    return 0


@njit
def obb_overlap_mats(ca, ra, ha, cb, rb, hb):
    """Separating-axis test taking rotation matrices tick() already has."""
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
    for i in range(3):
        rad_b = hb[0] * absr[i, 0] + hb[1] * absr[i, 1] + hb[2] * absr[i, 2]
        if abs(t[i]) > ha[i] + rad_b:
            return False
    for j in range(3):
        rad_a = ha[0] * absr[0, j] + ha[1] * absr[1, j] + ha[2] * absr[2, j]
        proj = abs(t[0] * r[0, j] + t[1] * r[1, j] + t[2] * r[2, j])
        if proj > rad_a + hb[j]:
            return False
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
def compute_sensors(pos, quat, touch, jp, jc, jax, target, forward, sensors):
    """Fill the flat sensor vector in place; updates the stored forward."""
    n = pos.shape[0]
    m = jp.shape[0]
    for i in range(n):
        sensors[i] = touch[i]
    for j in range(m):
        sensors[n + j] = twist_angle(quat[jp[j]], quat[jc[j]], jax[j])
    rm = quat_to_mat(quat[0])
    fx = rm[0, 0]
    fy = rm[1, 0]
    fn = math.sqrt(fx * fx + fy * fy)
    if fn > 1e-6:
        forward[0] = fx / fn
        forward[1] = fy / fn
    tx = target[0] - pos[0, 0]
    ty = target[1] - pos[0, 1]
    tz = target[2] - pos[0, 2]
    dist = math.sqrt(tx * tx + ty * ty + tz * tz)
    hn = math.sqrt(tx * tx + ty * ty)
    if hn > 1e-9:
        cross_z = forward[0] * ty - forward[1] * tx
        dot = forward[0] * tx + forward[1] * ty
        angle = math.atan2(cross_z, dot)
    else:
        angle = 0.0
    sensors[n + m] = angle
    sensors[n + m + 1] = dist


@njit
def run_span(pos, quat, vel, omg, inv_m, inv_ib, half, collide,
             jp, jc, jap, jac, jax, jlo, jhi, jtorq, has_motor,
             order, codes, pars, in_src, in_idx, in_w, cstate, cvalues,
             motor_source, ctrl_t, forward, sensors, touch,
             n_steps, motors_on, check_absorb, record,
             target, dt, absorb_radius,
             rec_pos, rec_dist, commands):
    """Run up to n_steps, controller in the loop.

    Returns (exit_code, steps_done).  Recording appends one row per
    completed step; the absorption row is included before returning.
    """
    ns = sensors.shape[0]
    for s in range(n_steps):
        controller_tick(order, codes, pars, in_src, in_idx, in_w,
                        cstate, cvalues, sensors, ctrl_t[0], dt)
        ctrl_t[0] += dt
        motor_commands(cvalues, motor_source, commands)
        rc = tick(pos, quat, vel, omg, inv_m, inv_ib, half, collide,
                  jp, jc, jap, jac, jax, jlo, jhi, jtorq, has_motor,
                  commands, motors_on, dt, touch)
        compute_sensors(pos, quat, touch, jp, jc, jax, target, forward, sensors)
        if record:
            rec_pos[s, 0] = pos[0, 0]
            rec_pos[s, 1] = pos[0, 1]
            rec_pos[s, 2] = pos[0, 2]
            rec_dist[s] = sensors[ns - 1]
        if rc != 0:
            return EXIT_UNSTABLE, s + 1
        if check_absorb and sensors[ns - 1] <= absorb_radius:
            return EXIT_ABSORBED, s + 1
    return EXIT_RAN_OUT, n_steps
