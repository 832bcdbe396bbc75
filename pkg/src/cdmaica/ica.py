"""Blind source separation: Comon, JADE and deflationary FastICA.

All three algorithms work on whitened data, where the remaining unknown is
an orthogonal rotation, and :func:`separate` maps their answer back to the
original coordinates.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import _kernels
from .numkit import (
    DimensionError,
    as_signal,
    cum4_eigenmatrices,
    joint_diagonalize,
    whiten,
)

ALGORITHMS = ("comon", "jade", "fastica")
CONTRASTS = ("kurtosis", "tanh")

COMON_MAX_SWEEPS = 50
JADE_MAX_SWEEPS = 100
JADE_EPS = 1e-8

# E[log cosh(nu)] for standard normal nu
_LOGCOSH_GAUSS = 0.3745672075


@dataclass(frozen=True)
class IcaConfig:
    algorithm: str = "fastica"
    contrast: str = "kurtosis"
    max_iterations: int = 100
    tolerance: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.contrast not in CONTRASTS:
            raise ValueError(f"contrast must be one of {CONTRASTS}, got {self.contrast!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass
class IcaResult:
    """Outcome of one separation.

    ``sources == unmixing @ input`` holds exactly for results returned by
    :func:`separate`. For the whitened-domain functions the input is the
    whitened matrix and ``unmixing`` is orthogonal.
    """

    unmixing: np.ndarray
    sources: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    contrast_value: float
    algorithm: str = ""
    history: np.ndarray = field(default=None, repr=False)
    whitened_unmixing: np.ndarray = field(default=None, repr=False)

    @property
    def n_converged(self):
        return int(np.sum(self.converged))

    @property
    def all_converged(self):
        return bool(np.all(self.converged))


class SeparationFailed(RuntimeError):
    """No component converged. The partial result is kept on ``.result``."""

    def __init__(self, result):
        self.result = result
        super().__init__(
            f"{result.algorithm}: none of {len(result.converged)} components converged"
        )


def _check_white(z):
    z = as_signal(z, "z")
    n, m = z.shape
    if m >= 2:
        zc = z - z.mean(axis=1, keepdims=True)
        c = zc @ zc.T / m
        if np.max(np.abs(c - np.eye(n))) > 1e-3:
            raise ValueError("input is not whitened (covariance differs from identity by > 1e-3)")
    return z


def _nonlinearity(name):
    if name == "kurtosis":
        return (lambda u: u**3), (lambda u: 3.0 * u * u)
    t = np.tanh
    return t, (lambda u: 1.0 - t(u) ** 2)


def _contrast_of(y, name):
    if name == "kurtosis":
        k = np.mean(y**4, axis=1) - 3.0
        return float(np.sum(k * k))
    g = np.mean(np.log(np.cosh(y)), axis=1) - _LOGCOSH_GAUSS
    return float(np.sum(g * g))


def _unit_sphere(rng, n):
    w = rng.standard_normal(n)
    return w / np.linalg.norm(w)


def _one_unit(z, w, basis, g, dg, cfg):
    m = z.shape[1]

    def deflate(v):
        if basis.shape[0]:
            v = v - basis.T @ (basis @ v)
        return v / np.linalg.norm(v)

    w = deflate(w)
    for it in range(1, cfg.max_iterations + 1):
        u = w @ z
        w_new = z @ g(u) / m - np.mean(dg(u)) * w
        w_new = deflate(w_new)
        done = 1.0 - abs(float(w_new @ w)) < cfg.tolerance
        w = w_new
        if done:
            return w, it, True
    return w, cfg.max_iterations, False


def fastica_deflate(z, cfg):
    """Deflationary fixed-point ICA on whitened rows.

    Each unit iterates ``w <- E{z g(w.z)} - E{g'(w.z)} w``, is
    Gram-Schmidt orthogonalized against the units already found and
    renormalized. A unit converges when ``1 - |w_new . w_old| < tolerance``.
    An unconverged unit gets one restart from a fresh seed before it is
    flagged; its iteration count includes both attempts. A pairwise saddle
    test (:func:`_saddle_test`) runs after extraction.
    """
    z = _check_white(z)
    n, _ = z.shape
    g, dg = _nonlinearity(cfg.contrast)
    rng = np.random.default_rng(cfg.seed)
    w_all = np.zeros((n, n))
    iters = np.zeros(n, dtype=int)
    conv = np.zeros(n, dtype=bool)
    for k in range(n):
        basis = w_all[:k]
        w, it, ok = _one_unit(z, _unit_sphere(rng, n), basis, g, dg, cfg)
        total = it
        if not ok:
            retry = np.random.default_rng([cfg.seed, k])
            w, it, ok = _one_unit(z, _unit_sphere(retry, n), basis, g, dg, cfg)
            total += it
        w_all[k] = w
        iters[k] = total
        conv[k] = ok
    _saddle_test(z, w_all, iters, conv, g, dg, cfg)
    y = w_all @ z
    return IcaResult(
        unmixing=w_all,
        sources=y,
        iterations=iters,
        converged=conv,
        contrast_value=_contrast_of(y, cfg.contrast),
        algorithm="fastica",
    )


def _unit_contrast(y, name):
    if name == "kurtosis":
        k = np.mean(y**4, axis=-1) - 3.0
        return k * k
    d = np.mean(np.log(np.cosh(y)), axis=-1) - _LOGCOSH_GAUSS
    return d * d


def _saddle_test(z, w_all, iters, conv, g, dg, cfg):
    """Escape saddle points between pairs of extracted components.

    Two sources of equal contrast have a stationary point of the fixed-point
    map halfway between them; the one-step convergence test can accept it.
    For every pair, the 45-degree rotation is tried; a gain means the pair
    sat on such a saddle, so the rotated pair is adopted and re-polished in
    its own plane (Tichavsky, Koldovsky & Oja, 2006). A correctly separated
    pair never gains: its rotated contrast is at most half the original.
    """
    n = w_all.shape[0]
    y = w_all @ z
    c = _unit_contrast(y, cfg.contrast)
    r = np.sqrt(0.5)
    for k in range(n - 1):
        for l in range(k + 1, n):
            u, v = r * (y[k] + y[l]), r * (y[k] - y[l])
            if _unit_contrast(u, cfg.contrast) + _unit_contrast(v, cfg.contrast) <= c[k] + c[l]:
                continue
            others = np.delete(w_all, [k, l], axis=0)
            wk, itk, okk = _one_unit(z, r * (w_all[k] + w_all[l]), others, g, dg, cfg)
            wl, itl, okl = _one_unit(z, r * (w_all[k] - w_all[l]), np.vstack([others, wk]), g, dg, cfg)
            w_all[k], w_all[l] = wk, wl
            iters[k] += itk
            iters[l] += itl
            conv[k], conv[l] = okk, okl
            y[k], y[l] = wk @ z, wl @ z
            c[k], c[l] = _unit_contrast(y[k], cfg.contrast), _unit_contrast(y[l], cfg.contrast)


def jade(z, cfg):
    """JADE restricted to the ``n`` most significant cumulant eigen-matrices.

    The returned unmixing is ``U.T`` where ``U`` jointly diagonalizes the
    eigen-matrices; ``contrast_value`` is their remaining off-diagonal
    energy and ``history`` traces it sweep by sweep.
    """
    z = _check_white(z)
    n, _ = z.shape
    cs = cum4_eigenmatrices(z, n)
    jd = joint_diagonalize(cs, eps=JADE_EPS, max_sweeps=JADE_MAX_SWEEPS)
    w = jd.rotation.T
    return IcaResult(
        unmixing=w,
        sources=w @ z,
        iterations=np.full(n, jd.sweeps, dtype=int),
        converged=np.full(n, jd.converged, dtype=bool),
        contrast_value=float(jd.history[-1]),
        algorithm="jade",
        history=jd.history,
    )


def comon(z, cfg):
    """Comon's pairwise rotations maximizing the summed squared kurtosis.

    Every pair of rows is rotated by the angle in ``(-pi/4, pi/4]`` that
    maximizes ``kurt(u)^2 + kurt(v)^2`` of the rotated pair. Sweeps stop
    when the best gain of a full sweep drops below ``cfg.tolerance``.
    """
    z = _check_white(z)
    n, _ = z.shape
    max_sweeps = min(cfg.max_iterations, COMON_MAX_SWEEPS)
    rot, sweeps, conv, history = _kernels.comon_sweeps(z, cfg.tolerance, max_sweeps)
    return IcaResult(
        unmixing=rot,
        sources=rot @ z,
        iterations=np.full(n, sweeps, dtype=int),
        converged=np.full(n, bool(conv), dtype=bool),
        contrast_value=float(history[-1]),
        algorithm="comon",
        history=history,
    )


_DISPATCH = {"comon": comon, "jade": jade, "fastica": fastica_deflate}


def separate(x, cfg=None):
    """Whiten ``x``, run the configured algorithm, and map back.

    Returns an :class:`IcaResult` with ``unmixing`` acting on the raw
    input, so ``sources == unmixing @ x``.

    Raises
    ------
    numkit.SingularDataError
        If the input covariance is rank deficient.
    SeparationFailed
        If no component converged.
    """
    cfg = cfg or IcaConfig()
    x = as_signal(x)
    n, m = x.shape
    if n < 2:
        raise DimensionError("separate needs at least 2 channels")
    if m < 10 * n:
        raise DimensionError(f"need at least {10 * n} samples for {n} channels, got {m}")
    z, wh = whiten(x)
    res = _DISPATCH[cfg.algorithm](z, cfg)
    unmixing = res.unmixing @ wh.whitener
    out = IcaResult(
        unmixing=unmixing,
        sources=unmixing @ x,
        iterations=res.iterations,
        converged=res.converged,
        contrast_value=res.contrast_value,
        algorithm=cfg.algorithm,
        history=res.history,
        whitened_unmixing=res.unmixing,
    )
    if out.n_converged == 0:
        raise SeparationFailed(out)
    return out


def amari_index(w, a):
    """Amari performance index of ``P = w @ a``, normalized to ``[0, 1]``.

    Zero exactly when ``P`` is a scaled permutation matrix.
    """
    p = np.abs(np.asarray(w, dtype=float) @ np.asarray(a, dtype=float))
    n = p.shape[0]
    if n < 2:
        return 0.0
    rows = np.sum(p / p.max(axis=1, keepdims=True), axis=1) - 1.0
    cols = np.sum(p / p.max(axis=0, keepdims=True), axis=0) - 1.0
    return float((rows.sum() + cols.sum()) / (2.0 * n * (n - 1)))


def rotation_angle(w):
    """Angle ``phi`` in degrees with ``w ~ [[cos, -sin], [sin, cos]](phi)``.

    Only the first row is read, so row permutations and sign flips of ``w``
    change ``phi`` by multiples of 90 degrees; the result is folded into
    ``(-45, 45]``.
    """
    ang = math.degrees(math.atan2(-w[0, 1], w[0, 0]))
    ang = (ang + 45.0) % 90.0 - 45.0
    return 45.0 if ang == -45.0 else ang
