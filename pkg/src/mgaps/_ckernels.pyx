# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled quadrotor closed-loop and sensitivity kernels.

Scalar C port of ``mgaps._pykernels``; see that module for the contract.
3x3 matrices are row-major ``double[9]``.
"""

from libc.math cimport atan2, copysign, cos, exp, fabs, isfinite, nextafter, sin, sqrt, tanh, M_PI

from mgaps.errors import ControllerSingular, SimulationDiverged

cdef double MAX_ANGLE = M_PI - 1e-6
cdef double SMALL_ANGLE = 1e-6
cdef double SERIES_RATIO = 1e-3


cdef inline void hat(const double* w, double* K) noexcept nogil:
    K[0] = 0.0
    K[1] = -w[2]
    K[2] = w[1]
    K[3] = w[2]
    K[4] = 0.0
    K[5] = -w[0]
    K[6] = -w[1]
    K[7] = w[0]
    K[8] = 0.0


cdef inline void mm3(const double* A, const double* B, double* C) noexcept nogil:
    cdef int i, j
    for i in range(3):
        for j in range(3):
            C[3 * i + j] = A[3 * i] * B[j] + A[3 * i + 1] * B[3 + j] + A[3 * i + 2] * B[6 + j]


cdef inline void mm3_tn(const double* A, const double* B, double* C) noexcept nogil:
    # C = A^T B
    cdef int i, j
    for i in range(3):
        for j in range(3):
            C[3 * i + j] = A[i] * B[j] + A[3 + i] * B[3 + j] + A[6 + i] * B[6 + j]


cdef inline void rodrigues(const double* r, double a, double b, double* R) noexcept nogil:
    # R = I + a K + b K^2
    cdef double K[9]
    cdef double K2[9]
    cdef int i
    hat(r, K)
    mm3(K, K, K2)
    for i in range(9):
        R[i] = a * K[i] + b * K2[i]
    R[0] += 1.0
    R[4] += 1.0
    R[8] += 1.0


cdef inline double norm3(const double* v) noexcept nogil:
    return sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


cdef int exp_so3(const double* r, double* R) noexcept nogil:
    cdef double th = norm3(r)
    cdef double a, b, t2
    if not th < MAX_ANGLE:
        return -1
    t2 = th * th
    if th < SMALL_ANGLE:
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
    else:
        a = sin(th) / th
        b = (1.0 - cos(th)) / t2
    rodrigues(r, a, b, R)
    return 0


cdef int log_so3(const double* R, double* r) noexcept nogil:
    cdef double s0 = 0.5 * (R[7] - R[5])
    cdef double s1 = 0.5 * (R[2] - R[6])
    cdef double s2 = 0.5 * (R[3] - R[1])
    cdef double sin_t = sqrt(s0 * s0 + s1 * s1 + s2 * s2)
    cdef double cos_t = 0.5 * (R[0] + R[4] + R[8] - 1.0)
    cdef double th = atan2(sin_t, cos_t)
    cdef double c
    if not th < MAX_ANGLE:
        return -1
    if th < SMALL_ANGLE:
        c = 1.0 + th * th / 6.0
    else:
        c = th / sin_t
    r[0] = c * s0
    r[1] = c * s1
    r[2] = c * s2
    return 0


cdef int flipped(const double* r, const double* rn) noexcept nogil:
    # antipodal representative closer to r means the path crossed angle pi
    cdef double th = norm3(rn)
    cdef double k, d_alt = 0.0, d_in = 0.0, a, b
    cdef int i
    if not th > 0.5 * M_PI:
        return 0
    k = 1.0 - 2.0 * M_PI / th
    for i in range(3):
        a = rn[i] * k - r[i]
        b = rn[i] - r[i]
        d_alt += a * a
        d_in += b * b
    return 1 if d_alt < d_in else 0


cdef void jr(const double* r, double* J) noexcept nogil:
    cdef double th = norm3(r)
    cdef double t2 = th * th
    cdef double a, b
    if th < SMALL_ANGLE:
        a = 0.5 - t2 / 24.0
        b = 1.0 / 6.0 - t2 / 120.0
    else:
        a = (1.0 - cos(th)) / t2
        b = (th - sin(th)) / (t2 * th)
    rodrigues(r, -a, b, J)


cdef int jr_inv(const double* r, double* J) noexcept nogil:
    cdef double th = norm3(r)
    cdef double c
    if not th < MAX_ANGLE:
        return -1
    if th < SMALL_ANGLE:
        c = 1.0 / 12.0 + th * th / 720.0
    else:
        c = 1.0 / (th * th) - (1.0 + cos(th)) / (2.0 * th * sin(th))
    rodrigues(r, 0.5, c, J)
    return 0


cdef int shortest_rotation(const double* z, double* rd, double* D) noexcept nogil:
    """Fill ``rd`` and ``D = d rd / d z``; -1 when singular."""
    cdef double zx = z[0], zy = z[1], zz = z[2]
    cdef double s2 = zx * zx + zy * zy
    cdef double s = sqrt(s2)
    cdef double nz2 = s2 + zz * zz
    cdef double psi, chi, u2, alpha
    if not sqrt(nz2) > 1e-9:
        return -1
    if zx == 0.0 and zy == 0.0 and not zz > 0.0:
        return -1
    if zz > 0.0 and s < SERIES_RATIO * zz:
        u2 = s2 / (zz * zz)
        psi = (1.0 - u2 / 3.0 + u2 * u2 / 5.0) / zz
        chi = (-2.0 / 3.0 + 4.0 * u2 / 5.0) / (zz * zz * zz)
    else:
        alpha = atan2(s, zz)
        if not alpha < MAX_ANGLE:
            return -1
        psi = alpha / s
        chi = (zz / nz2 - psi) / s2
    rd[0] = -psi * zy
    rd[1] = psi * zx
    rd[2] = 0.0
    # columns: d/dzx, d/dzy, d/dzz
    D[0] = chi * zx * (-zy)
    D[3] = chi * zx * zx + psi
    D[6] = 0.0
    D[1] = chi * zy * (-zy) - psi
    D[4] = chi * zy * zx
    D[7] = 0.0
    D[2] = zy / nz2
    D[5] = -zx / nz2
    D[8] = 0.0
    return 0


def quad_closed_loop(
    const double[::1] x, const double[::1] ref_row, const double[::1] theta,
    double dt, double gravity, double b_xy, double b_z, const double[::1] weights,
    double mass_scale, const double[::1] wind_accel, bint want_derivs,
    double[::1] x_next, double[::1] u, double[:, ::1] dg_dx, double[:, ::1] dg_du,
    double[:, ::1] dpi_dx, double[:, ::1] dpi_dth, double[::1] df_dx, double[::1] df_du,
):
    cdef double k[10]
    cdef double gi[3]
    cdef double gp[3]
    cdef double gv[3]
    cdef double gr[3]
    cdef double gw[3]
    cdef double ei[3]
    cdef double ep[3]
    cdef double ev[3]
    cdef double ew[3]
    cdef double z[3]
    cdef double r[3]
    cdef double R[9]
    cdef double rd[9]
    cdef double D[9]
    cdef double neg_rd[3]
    cdef double Erd[9]
    cdef double E[9]
    cdef double er[3]
    cdef double tau_raw[3]
    cdef double th3[3]
    cdef double tau[3]
    cdef double sech2[3]
    cdef double bounds[3]
    cdef double phi[3]
    cdef double Ephi[9]
    cdef double Rn[9]
    cdef double rn[3]
    cdef double Jr_r[9]
    cdef double Jinv_rn[9]
    cdef double Jr_phi[9]
    cdef double T1[9]
    cdef double T2[9]
    cdef double db3[9]
    cdef double Jinv_er[9]
    cdef double Erd_pos[9]
    cdef double der_dr[9]
    cdef double der_drd[9]
    cdef double der_dz[9]
    cdef double Jr_nrd[9]
    cdef double dz_dth[18]   # 3 x 6
    cdef double b3[3]
    cdef double f, f_true, cost, wx, t
    cdef int i, j, c, rc
    cdef bint omega_zero

    for i in range(10):
        k[i] = exp(theta[i])
    gi[0] = k[0]; gi[1] = k[0]; gi[2] = k[1]
    gp[0] = k[2]; gp[1] = k[2]; gp[2] = k[3]
    gv[0] = k[4]; gv[1] = k[4]; gv[2] = k[5]
    gr[0] = k[6]; gr[1] = k[6]; gr[2] = k[7]
    gw[0] = k[8]; gw[1] = k[8]; gw[2] = k[9]
    bounds[0] = b_xy; bounds[1] = b_xy; bounds[2] = b_z

    for i in range(3):
        ei[i] = x[i]
        ep[i] = x[3 + i] - ref_row[i]
        ev[i] = x[6 + i] - ref_row[3 + i]
        r[i] = x[9 + i]
        ew[i] = x[12 + i] - ref_row[9 + i]
        z[i] = -gi[i] * ei[i] - gp[i] * ep[i] - gv[i] * ev[i] + ref_row[6 + i]
    z[2] += gravity

    if exp_so3(r, R) < 0:
        raise SimulationDiverged("attitude left single-cover region")
    b3[0] = R[2]; b3[1] = R[5]; b3[2] = R[8]
    f = z[0] * b3[0] + z[1] * b3[1] + z[2] * b3[2]

    if shortest_rotation(z, rd, D) < 0:
        raise ControllerSingular("thrust vector singular for shortest rotation")
    for i in range(3):
        neg_rd[i] = -rd[i]
    exp_so3(neg_rd, Erd)
    mm3(R, Erd, E)
    if log_so3(E, er) < 0:
        raise ControllerSingular("attitude error at pi")

    for i in range(3):
        tau_raw[i] = -gr[i] * er[i] - gw[i] * ew[i]
        th3[i] = tanh(tau_raw[i] / bounds[i])
        tau[i] = bounds[i] * th3[i]
        if fabs(tau[i]) >= bounds[i]:
            tau[i] = copysign(nextafter(bounds[i], 0.0), tau[i])
        sech2[i] = 1.0 - th3[i] * th3[i]

    # cost
    cost = weights[0] * (ep[0] * ep[0] + ep[1] * ep[1] + ep[2] * ep[2])
    cost += weights[1] * (ev[0] * ev[0] + ev[1] * ev[1] + ev[2] * ev[2])
    cost += weights[2] * (ew[0] * ew[0] + ew[1] * ew[1] + ew[2] * ew[2])
    cost += weights[3] * (tau[0] * tau[0] + tau[1] * tau[1] + tau[2] * tau[2])
    cost += weights[4] * f * f
    cost = dt * cost

    # true plant
    f_true = (f if f > 0.0 else 0.0) / mass_scale
    omega_zero = x[12] == 0.0 and x[13] == 0.0 and x[14] == 0.0
    for i in range(3):
        phi[i] = dt * x[12 + i]
    if exp_so3(phi, Ephi) < 0:
        raise SimulationDiverged("angular velocity too large for one step")
    if omega_zero:
        rn[0] = r[0]; rn[1] = r[1]; rn[2] = r[2]
    else:
        mm3(R, Ephi, Rn)
        if log_so3(Rn, rn) < 0 or flipped(r, rn):
            raise SimulationDiverged("attitude left single-cover region")
    for i in range(3):
        x_next[i] = x[i] + dt * (x[3 + i] - ref_row[i])
        x_next[3 + i] = x[3 + i] + dt * x[6 + i]
        x_next[6 + i] = x[6 + i] + dt * (f_true * b3[i] - (gravity if i == 2 else 0.0) + wind_accel[i])
        x_next[9 + i] = rn[i]
        x_next[12 + i] = x[12 + i] + dt * tau[i]
    for i in range(15):
        if not isfinite(x_next[i]):
            raise SimulationDiverged("non-finite state")
    u[0] = f
    u[1] = tau[0]; u[2] = tau[1]; u[3] = tau[2]

    if not want_derivs:
        return cost

    # ---- nominal dynamics Jacobians
    for i in range(15):
        for j in range(15):
            dg_dx[i, j] = 0.0
        for j in range(4):
            dg_du[i, j] = 0.0
    jr(r, Jr_r)
    if omega_zero:
        # nominal model takes the log/exp path; rn equals r up to roundoff
        mm3(R, Ephi, Rn)
        log_so3(Rn, rn)
    if jr_inv(rn, Jinv_rn) < 0:
        raise SimulationDiverged("attitude left single-cover region")
    jr(phi, Jr_phi)
    # db3 = -R hat(e_z) Jr(r); -R hat(e_z) has columns (-R[:,1], R[:,0], 0)
    for i in range(3):
        T1[3 * i + 0] = -R[3 * i + 1]
        T1[3 * i + 1] = R[3 * i + 0]
        T1[3 * i + 2] = 0.0
    mm3(T1, Jr_r, db3)
    for i in range(3):
        dg_dx[i, i] = 1.0
        dg_dx[i, 3 + i] = dt
        dg_dx[3 + i, 3 + i] = 1.0
        dg_dx[3 + i, 6 + i] = dt
        dg_dx[6 + i, 6 + i] = 1.0
        dg_dx[12 + i, 12 + i] = 1.0
        for j in range(3):
            dg_dx[6 + i, 9 + j] = dt * f * db3[3 * i + j]
        dg_du[6 + i, 0] = dt * b3[i]
        dg_du[12 + i, 1 + i] = dt
    # d r'/d r = Jinv(rn) Ephi^T Jr(r);  d r'/d w = dt Jinv(rn) Jr(phi)
    mm3_tn(Ephi, Jr_r, T1)
    mm3(Jinv_rn, T1, T2)
    mm3(Jinv_rn, Jr_phi, T1)
    for i in range(3):
        for j in range(3):
            dg_dx[9 + i, 9 + j] = T2[3 * i + j]
            dg_dx[9 + i, 12 + j] = dt * T1[3 * i + j]

    # ---- policy Jacobians
    jr_inv(er, Jinv_er)
    exp_so3(rd, Erd_pos)
    mm3(Erd_pos, Jr_r, T1)
    mm3(Jinv_er, T1, der_dr)
    jr(neg_rd, Jr_nrd)
    mm3(Jinv_er, Jr_nrd, T1)
    for i in range(9):
        der_drd[i] = -T1[i]
    mm3(der_drd, D, der_dz)

    for i in range(4):
        for j in range(15):
            dpi_dx[i, j] = 0.0
        for j in range(10):
            dpi_dth[i, j] = 0.0

    # thrust row
    for j in range(3):
        dpi_dx[0, j] = -gi[j] * b3[j]
        dpi_dx[0, 3 + j] = -gp[j] * b3[j]
        dpi_dx[0, 6 + j] = -gv[j] * b3[j]
        dpi_dx[0, 9 + j] = z[0] * db3[j] + z[1] * db3[3 + j] + z[2] * db3[6 + j]

    # dz/dtheta, 3 x 6 row-major; columns (ki_xy, ki_z, kp_xy, kp_z, kv_xy, kv_z)
    for i in range(18):
        dz_dth[i] = 0.0
    for i in range(2):
        dz_dth[6 * i + 0] = -k[0] * ei[i]
        dz_dth[6 * i + 2] = -k[2] * ep[i]
        dz_dth[6 * i + 4] = -k[4] * ev[i]
    dz_dth[12 + 1] = -k[1] * ei[2]
    dz_dth[12 + 3] = -k[3] * ep[2]
    dz_dth[12 + 5] = -k[5] * ev[2]
    for c in range(6):
        dpi_dth[0, c] = b3[0] * dz_dth[c] + b3[1] * dz_dth[6 + c] + b3[2] * dz_dth[12 + c]

    # torque rows: d tau_raw = -gr * (der_dz dz + der_dr dr) - gw dw
    for i in range(3):
        for j in range(3):
            t = -gr[i] * der_dz[3 * i + j]
            dpi_dx[1 + i, j] = sech2[i] * t * (-gi[j])
            dpi_dx[1 + i, 3 + j] = sech2[i] * t * (-gp[j])
            dpi_dx[1 + i, 6 + j] = sech2[i] * t * (-gv[j])
            dpi_dx[1 + i, 9 + j] = sech2[i] * (-gr[i] * der_dr[3 * i + j])
        dpi_dx[1 + i, 12 + i] = sech2[i] * (-gw[i])
        for c in range(6):
            t = der_dz[3 * i] * dz_dth[c] + der_dz[3 * i + 1] * dz_dth[6 + c] + der_dz[3 * i + 2] * dz_dth[12 + c]
            dpi_dth[1 + i, c] = sech2[i] * (-gr[i] * t)
    for i in range(2):
        dpi_dth[1 + i, 6] = sech2[i] * (-k[6] * er[i])
        dpi_dth[1 + i, 8] = sech2[i] * (-k[8] * ew[i])
    dpi_dth[3, 7] = sech2[2] * (-k[7] * er[2])
    dpi_dth[3, 9] = sech2[2] * (-k[9] * ew[2])

    # ---- cost gradients
    for j in range(15):
        df_dx[j] = 0.0
    for i in range(3):
        df_dx[3 + i] = 2.0 * dt * weights[0] * ep[i]
        df_dx[6 + i] = 2.0 * dt * weights[1] * ev[i]
        df_dx[12 + i] = 2.0 * dt * weights[2] * ew[i]
        df_du[1 + i] = 2.0 * dt * weights[3] * tau[i]
    df_du[0] = 2.0 * dt * weights[4] * f
    return cost


def sens_update(
    const double[:, ::1] y, const double[:, ::1] dg_dx, const double[:, ::1] dg_du,
    const double[:, ::1] dpi_dx, const double[:, ::1] dpi_dth,
    const double[::1] df_dx, const double[::1] df_du,
    double[:, ::1] y_out, double[::1] grad,
):
    cdef Py_ssize_t n = dg_dx.shape[0]
    cdef Py_ssize_t m = dg_du.shape[1]
    cdef Py_ssize_t d = y.shape[1]
    cdef Py_ssize_t i, j, l
    cdef double acc, b
    cdef double row[64]
    cdef double ky[16 * 64]   # dpi_dx @ y, m x d
    if n > 64 or m > 16 or d > 64:
        raise ValueError("dimensions exceed compiled kernel limits")
    with nogil:
        # ky = dpi_dx @ y + dpi_dth  (total derivative of u w.r.t. theta)
        for i in range(m):
            for j in range(d):
                acc = dpi_dth[i, j]
                for l in range(n):
                    acc = acc + dpi_dx[i, l] * y[l, j]
                ky[i * d + j] = acc
        for j in range(d):
            acc = 0.0
            for l in range(n):
                acc = acc + df_dx[l] * y[l, j]
            for l in range(m):
                acc = acc + df_du[l] * ky[l * d + j]
            grad[j] = acc
        for i in range(n):
            for j in range(d):
                row[j] = 0.0
            for l in range(n):
                b = dg_dx[i, l]
                if b != 0.0:
                    for j in range(d):
                        row[j] = row[j] + b * y[l, j]
            for l in range(m):
                b = dg_du[i, l]
                if b != 0.0:
                    for j in range(d):
                        row[j] = row[j] + b * ky[l * d + j]
            for j in range(d):
                y_out[i, j] = row[j]
