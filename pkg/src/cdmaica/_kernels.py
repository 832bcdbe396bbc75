"""Hot inner loops: cyclic Jacobi eigensolver, Jacobi joint diagonalization
and Comon's pairwise kurtosis sweeps.

Every kernel exists twice: a loop-style body compiled with numba (suffix
``_nb``) and a vectorized numpy body (suffix ``_np``). The public wrappers
pick one according to :data:`cdmaica._accel.USE_NUMBA`, or to an explicit
``backend`` argument. Both paths run the same algorithm with the same pair
ordering, so their results agree to rounding.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit


def _resolve(backend):
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


# ---------------------------------------------------------------------------
# Cyclic Jacobi eigensolver
# ---------------------------------------------------------------------------


@njit
def _jacobi_eig_nb(a, tol, max_sweeps):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    thresh = tol * tol * scale
    sweeps = 0
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        if off <= thresh:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweeps


def _jacobi_eig_np(a, tol, max_sweeps):
    n = a.shape[0]
    a = np.array(a, dtype=float)
    v = np.eye(n)
    thresh = tol * tol * float(np.sum(a * a))
    sweeps = 0
    iu = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        if 2.0 * float(np.sum(a[iu] ** 2)) <= thresh:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps


def jacobi_eig(a, tol=1e-15, max_sweeps=100, backend=None):
    """Eigen-decompose a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` in no particular order.
    Iteration stops once the off-diagonal Frobenius norm falls below
    ``tol`` times the Frobenius norm of ``a``.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    if _resolve(backend) == "numba":
        return _jacobi_eig_nb(a, float(tol), int(max_sweeps))
    return _jacobi_eig_np(a, float(tol), int(max_sweeps))


# ---------------------------------------------------------------------------
# Joint diagonalization (Cardoso-Souloumiac Jacobi sweeps)
# ---------------------------------------------------------------------------


@njit
def _offdiag_energy_nb(mats):
    k, n, _ = mats.shape
    e = 0.0
    for r in range(k):
        for i in range(n):
            for j in range(n):
                if i != j:
                    e += mats[r, i, j] * mats[r, i, j]
    return e


@njit
def _joint_diag_nb(mats, eps, max_sweeps):
    k, n, _ = mats.shape
    mats = mats.copy()
    v = np.eye(n)
    history = np.empty(max_sweeps + 1)
    history[0] = _offdiag_energy_nb(mats)
    sweeps = 0
    converged = False
    for sweep in range(max_sweeps):
        sweeps += 1
        max_s = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                g11 = 0.0
                g22 = 0.0
                g12 = 0.0
                for r in range(k):
                    d = mats[r, p, p] - mats[r, q, q]
                    o = mats[r, p, q] + mats[r, q, p]
                    g11 += d * d
                    g22 += o * o
                    g12 += d * o
                ton = g11 - g22
                toff = 2.0 * g12
                theta = 0.25 * math.atan2(toff, ton)
                c = math.cos(theta)
                s = math.sin(theta)
                if abs(s) > max_s:
                    max_s = abs(s)
                if abs(s) <= eps:
                    continue
                for r in range(k):
                    for j in range(n):
                        mp = mats[r, p, j]
                        mq = mats[r, q, j]
                        mats[r, p, j] = c * mp + s * mq
                        mats[r, q, j] = -s * mp + c * mq
                    for i in range(n):
                        mp = mats[r, i, p]
                        mq = mats[r, i, q]
                        mats[r, i, p] = c * mp + s * mq
                        mats[r, i, q] = -s * mp + c * mq
                for i in range(n):
                    vp = v[i, p]
                    vq = v[i, q]
                    v[i, p] = c * vp + s * vq
                    v[i, q] = -s * vp + c * vq
        history[sweep + 1] = _offdiag_energy_nb(mats)
        if max_s <= eps:
            converged = True
            break
    return v, mats, sweeps, converged, history[: sweeps + 1].copy()


def _joint_diag_np(mats, eps, max_sweeps):
    k, n, _ = mats.shape
    mats = np.array(mats, dtype=float)
    v = np.eye(n)
    mask = ~np.eye(n, dtype=bool)
    history = [float(np.sum(mats[:, mask] ** 2))]
    sweeps = 0
    converged = False
    for _ in range(max_sweeps):
        sweeps += 1
        max_s = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                d = mats[:, p, p] - mats[:, q, q]
                o = mats[:, p, q] + mats[:, q, p]
                ton = float(d @ d - o @ o)
                toff = 2.0 * float(d @ o)
                theta = 0.25 * math.atan2(toff, ton)
                c, s = math.cos(theta), math.sin(theta)
                max_s = max(max_s, abs(s))
                if abs(s) <= eps:
                    continue
                rp, rq = mats[:, p, :].copy(), mats[:, q, :].copy()
                mats[:, p, :] = c * rp + s * rq
                mats[:, q, :] = -s * rp + c * rq
                cp, cq = mats[:, :, p].copy(), mats[:, :, q].copy()
                mats[:, :, p] = c * cp + s * cq
                mats[:, :, q] = -s * cp + c * cq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp + s * vq
                v[:, q] = -s * vp + c * vq
        history.append(float(np.sum(mats[:, mask] ** 2)))
        if max_s <= eps:
            converged = True
            break
    return v, mats, sweeps, converged, np.array(history)


def joint_diag(mats, eps=1e-8, max_sweeps=100, backend=None):
    """Find orthogonal ``V`` making every ``V.T @ M @ V`` as diagonal as possible.

    Returns ``(V, rotated, sweeps, converged, history)`` where ``history``
    holds the total squared off-diagonal energy before the first sweep and
    after each sweep.
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    if _resolve(backend) == "numba":
        return _joint_diag_nb(mats, float(eps), int(max_sweeps))
    return _joint_diag_np(mats, float(eps), int(max_sweeps))


# ---------------------------------------------------------------------------
# Comon pairwise kurtosis sweeps
# ---------------------------------------------------------------------------
#
# For a whitened pair (x, y) rotated to u = c x + s y, v = -s x + c y, the
# contrast kurt(u)^2 + kurt(v)^2 is a trigonometric polynomial in
# phi = 4 theta with harmonics 0, 1, 2 only. Its five Fourier coefficients
# are read off five equispaced samples; the stationary points are the roots
# of a quartic in exp(i phi).


def _make_pair_helpers(deco):
    @deco
    def pair_psi(m40, m31, m22, m13, m04, c, s):
        c2 = c * c
        s2 = s * s
        ku = c2 * c2 * m40 + 4.0 * c2 * c * s * m31 + 6.0 * c2 * s2 * m22 \
            + 4.0 * c * s2 * s * m13 + s2 * s2 * m04 - 3.0
        kv = s2 * s2 * m40 - 4.0 * s2 * s * c * m31 + 6.0 * c2 * s2 * m22 \
            - 4.0 * s * c2 * c * m13 + c2 * c2 * m04 - 3.0
        return ku * ku + kv * kv

    @deco
    def best_angle(m40, m31, m22, m13, m04):
        samples = np.empty(5)
        for k in range(5):
            theta = 2.0 * math.pi * k / 5.0 / 4.0
            samples[k] = pair_psi(m40, m31, m22, m13, m04, math.cos(theta), math.sin(theta))
        a1 = 0.0
        b1 = 0.0
        a2 = 0.0
        b2 = 0.0
        for k in range(5):
            phi = 2.0 * math.pi * k / 5.0
            a1 += samples[k] * math.cos(phi)
            b1 += samples[k] * math.sin(phi)
            a2 += samples[k] * math.cos(2.0 * phi)
            b2 += samples[k] * math.sin(2.0 * phi)
        a1 *= 0.4
        b1 *= 0.4
        a2 *= 0.4
        b2 *= 0.4
        base = samples[0]
        best_theta = 0.0
        best = base
        coeffs = np.empty(5, dtype=np.complex128)
        coeffs[0] = complex(b2, a2)
        coeffs[1] = complex(0.5 * b1, 0.5 * a1)
        coeffs[2] = 0.0
        coeffs[3] = complex(0.5 * b1, -0.5 * a1)
        coeffs[4] = complex(b2, -a2)
        big = 0.0
        for k in range(5):
            if abs(coeffs[k]) > big:
                big = abs(coeffs[k])
        if big <= 1e-14 * (1.0 + abs(base)):
            return 0.0, 0.0
        roots = np.roots(coeffs)
        for r in roots:
            phi = math.atan2(r.imag, r.real)
            theta = phi / 4.0
            val = pair_psi(m40, m31, m22, m13, m04, math.cos(theta), math.sin(theta))
            if val > best:
                best = val
                best_theta = theta
        return best_theta, best - base

    return pair_psi, best_angle


_pair_psi_py, _best_angle_py = _make_pair_helpers(lambda f: f)
_pair_psi_nb, _best_angle_nb = _make_pair_helpers(njit)


@njit
def _comon_nb(z, tol, max_sweeps):
    n, m = z.shape
    z = z.copy()
    rot = np.eye(n)
    history = np.empty(max_sweeps + 1)
    contrast = 0.0
    for i in range(n):
        acc = 0.0
        for t in range(m):
            x2 = z[i, t] * z[i, t]
            acc += x2 * x2
        kurt = acc / m - 3.0
        contrast += kurt * kurt
    history[0] = contrast
    sweeps = 0
    converged = n < 2
    for sweep in range(max_sweeps):
        if n < 2:
            break
        sweeps += 1
        max_gain = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                m40 = 0.0
                m31 = 0.0
                m22 = 0.0
                m13 = 0.0
                m04 = 0.0
                for t in range(m):
                    x = z[p, t]
                    y = z[q, t]
                    x2 = x * x
                    y2 = y * y
                    m40 += x2 * x2
                    m31 += x2 * x * y
                    m22 += x2 * y2
                    m13 += x * y2 * y
                    m04 += y2 * y2
                m40 /= m
                m31 /= m
                m22 /= m
                m13 /= m
                m04 /= m
                theta, gain = _best_angle_nb(m40, m31, m22, m13, m04)
                if gain <= 0.0 or theta == 0.0:
                    continue
                if gain > max_gain:
                    max_gain = gain
                c = math.cos(theta)
                s = math.sin(theta)
                for t in range(m):
                    x = z[p, t]
                    y = z[q, t]
                    z[p, t] = c * x + s * y
                    z[q, t] = -s * x + c * y
                for j in range(n):
                    rp = rot[p, j]
                    rq = rot[q, j]
                    rot[p, j] = c * rp + s * rq
                    rot[q, j] = -s * rp + c * rq
                contrast += gain
        history[sweep + 1] = contrast
        if max_gain < tol:
            converged = True
            break
    return rot, sweeps, converged, history[: sweeps + 1].copy()


def _comon_np(z, tol, max_sweeps):
    n, m = z.shape
    z = np.array(z, dtype=float)
    rot = np.eye(n)
    contrast = float(np.sum((np.mean(z**4, axis=1) - 3.0) ** 2))
    history = [contrast]
    sweeps = 0
    converged = n < 2
    for _ in range(max_sweeps):
        if n < 2:
            break
        sweeps += 1
        max_gain = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                x, y = z[p], z[q]
                x2, y2 = x * x, y * y
                moments = (
                    float(np.mean(x2 * x2)),
                    float(np.mean(x2 * x * y)),
                    float(np.mean(x2 * y2)),
                    float(np.mean(x * y2 * y)),
                    float(np.mean(y2 * y2)),
                )
                theta, gain = _best_angle_py(*moments)
                if gain <= 0.0 or theta == 0.0:
                    continue
                max_gain = max(max_gain, gain)
                c, s = math.cos(theta), math.sin(theta)
                z[p], z[q] = c * x + s * y, -s * x + c * y
                rp, rq = rot[p].copy(), rot[q].copy()
                rot[p] = c * rp + s * rq
                rot[q] = -s * rp + c * rq
                contrast += gain
        history.append(contrast)
        if max_gain < tol:
            converged = True
            break
    return rot, sweeps, converged, np.array(history)


def comon_sweeps(z, tol=1e-4, max_sweeps=50, backend=None):
    """Rotate whitened rows pairwise to maximize the sum of squared kurtoses.

    Returns ``(rotation, sweeps, converged, history)``. ``rotation`` is
    orthogonal with ``rotation @ z`` the separated rows; ``history`` is the
    contrast before the first sweep and after each sweep. A sweep converges
    when no pair rotation gains ``tol`` or more.
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    if _resolve(backend) == "numba":
        return _comon_nb(z, float(tol), int(max_sweeps))
    return _comon_np(z, float(tol), int(max_sweeps))


def pair_contrast(moments, theta):
    """Squared-kurtosis contrast of a whitened pair rotated by ``theta``."""
    return _pair_psi_py(*moments, math.cos(theta), math.sin(theta))
