"""Independent ground-truth routes for the least Rayleigh quotient.

None of these go through the iteration or flow machinery:

* ``symmetric_eigs``: cyclic Jacobi rotations for dense symmetric matrices.
* ``direct_rayleigh_min``: spectral projected gradient descent of
  p Phi(u)/||u||^p on the unit sphere of the space norm, multi-start.
  Sup spaces use peak enumeration instead (one smooth constrained
  minimization per candidate peak index), since the sup-sphere is
  nonsmooth exactly at the minimizers.
* ``hilbert_closed_form``: the explicit diagonal-quadratic solution
  sequences used to cross-check both schemes step by step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateInputError
from .problems import ProblemInstance
from .spaces import CoeffVec, SpaceKind, as_array, optimal_shift

__all__ = [
    "OracleMethod",
    "OracleResult",
    "symmetric_eigs",
    "direct_rayleigh_min",
    "oracle_lambda",
    "hilbert_closed_form",
    "eigen_residual",
]

DEFAULT_SEED = 0x5EED


class OracleMethod(Enum):
    JACOBI_EIG = "jacobi_eig"
    PROJECTED_GRADIENT = "projected_gradient"
    CLOSED_FORM = "closed_form"


@dataclass
class OracleResult:
    lambda_star: float
    minimizer: CoeffVec
    method: OracleMethod
    certificate: float


def eigen_residual(inst: ProblemInstance, u, lam: float) -> float:
    """Relative dual-norm residual of the eigen-relation dPhi(u) = lam J_p(u)."""
    space = inst.space
    u = space.check_dim(as_array(u))
    m = float(np.max(np.abs(u)))
    if m == 0.0:
        raise DegenerateInputError("eigen residual undefined at zero")
    u = u / m
    g = inst.gradient(u)
    j = space.duality_map(u).values
    ref = lam * space.dual_norm(j)
    return space.dual_norm(g - lam * j) / max(ref, 1e-300)


def symmetric_eigs(a):
    """Eigendecomposition of a dense symmetric matrix by cyclic Jacobi sweeps.

    Returns (eigenvalues ascending, eigenvectors as columns).  Sweeps stop
    when the off-diagonal Frobenius mass drops below 1e-12 ||A||_F.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DegenerateInputError("matrix must be square")
    n = a.shape[0]
    if n > 512:
        raise DegenerateInputError("Jacobi oracle is limited to dim <= 512")
    scale = float(np.linalg.norm(a))
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, scale)):
        raise DegenerateInputError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if scale == 0.0:
        return np.zeros(n), v

    def offdiag(m):
        return math.sqrt(max(float(np.sum(m * m)) - float(np.sum(np.diag(m) ** 2)), 0.0))

    for _ in range(60):
        if offdiag(a) <= 1e-12 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-14 * scale / max(n, 1):
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                a[[p, q], :] = rot @ a[[p, q], :]
                a[:, [p, q]] = a[:, [p, q]] @ rot.T
                v[:, [p, q]] = v[:, [p, q]] @ rot.T
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _unit(inst, u):
    """Project to the unit sphere of the space norm (recentred for quotients)."""
    space = inst.space
    if space.kind is SpaceKind.QUOTIENT_LP:
        u = u + optimal_shift(u, space)
    n = space.norm(u)
    if n == 0.0:
        raise DegenerateInputError("cannot normalize zero-norm start")
    return u / n


def _spg(inst, u0, tol, max_iters, endgame=True):
    """Projected BB descent of the Rayleigh quotient on the unit sphere.

    Once quotient differences fall below rounding, acceptance switches to
    decrease of the eigen-relation residual, which stays resolvable down to
    machine scale (``endgame``; disabled during coarse multi-start
    exploration, where basin identification is all that matters).
    """
    space = inst.space
    w = space.pairing_weights()

    def state(u):
        lam = inst.rayleigh(u)
        g = inst.gradient(u)
        j = space.duality_map(u).values
        r = g - lam * j
        cert = space.dual_norm(r) / max(lam * space.dual_norm(j), 1e-300)
        return lam, r, cert

    u = _unit(inst, u0)
    lam, r, cert = state(u)
    prev = None
    t = 1.0 / max(lam, 1.0)
    for _ in range(max_iters):
        if cert <= tol:
            break
        e = w * r  # euclidean gradient of the quotient on the sphere (up to p)
        if prev is not None:
            s, y = u - prev[0], e - prev[1]
            sy, yy = float(s @ y), float(y @ y)
            if sy > 0.0 and yy > 0.0:
                t = sy / yy
        t = min(max(t, 1e-18), 1e18)
        prev = (u, e)
        ee = float(e @ e)
        noise = 16.0 * np.finfo(float).eps * (1.0 + abs(lam))
        accepted = False
        tk = t
        if 1e-4 * tk * ee > noise:
            for _ in range(60):
                u_new = _unit(inst, u - tk * e)
                lam_new = inst.rayleigh(u_new)
                if lam_new <= lam - 1e-4 * tk * ee:
                    accepted = True
                    lam, r, cert = state(u_new)
                    u = u_new
                    break
                tk *= 0.5
                if 1e-4 * tk * ee <= noise:
                    break
        if not accepted and endgame:
            tk = t
            for _ in range(60):
                u_new = _unit(inst, u - tk * e)
                lam_new, r_new, cert_new = state(u_new)
                if cert_new < cert:
                    accepted = True
                    u, lam, r, cert = u_new, lam_new, r_new, cert_new
                    break
                tk *= 0.5
        if not accepted:
            break
    return u, lam, cert


def _slice_minimum(inst, i, u, tol, max_iters):
    """Minimize Phi over the slice {u_i fixed} by BB/Armijo on the rest.

    Stops when the total variation of the free gradient components drops
    below tol times the point-load magnitude at the peak (the TV norm is
    the sup-space dual norm, so this matches the certificate)."""
    w = inst.space.pairing_weights()

    def slice_grad(u):
        e = w * inst.gradient(u)
        load = abs(e[i])
        e[i] = 0.0
        return e, load

    f = inst.value(u)
    e, load = slice_grad(u)
    t = 1.0
    prev = None
    for _ in range(max_iters):
        if float(np.sum(np.abs(e))) <= tol * max(load, 1e-300):
            break
        if prev is not None:
            s, y = u - prev[0], e - prev[1]
            sy, yy = float(s @ y), float(y @ y)
            if sy > 0.0 and yy > 0.0:
                t = sy / yy
        t = min(max(t, 1e-18), 1e18)
        prev = (u, e.copy())
        ee = float(e @ e)
        noise = 16.0 * np.finfo(float).eps * (1.0 + abs(f))
        accepted = False
        tk = t
        if 1e-4 * tk * ee > noise:
            for _ in range(60):
                u_new = u - tk * e
                f_new = inst.value(u_new)
                if f_new <= f - 1e-4 * tk * ee:
                    accepted = True
                    e_new, load = slice_grad(u_new)
                    break
                tk *= 0.5
                if 1e-4 * tk * ee <= noise:
                    break
        if not accepted:
            gnorm = float(np.sum(np.abs(e)))
            tk = t
            for _ in range(60):
                u_new = u - tk * e
                f_new = inst.value(u_new)
                e_new, load_new = slice_grad(u_new)
                if float(np.sum(np.abs(e_new))) < gnorm:
                    accepted = True
                    load = load_new
                    break
                tk *= 0.5
        if not accepted:
            break
        u, f, e = u_new, f_new, e_new
    return u


def _sup_peak_minimum(inst, tol):
    """Minimize the quotient over a sup space by enumerating the peak index.

    Every slice {u_i = 1} is solved coarsely; the winning peak is polished
    to a certificate a factor below tol (TV norms sum entrywise errors, so
    the slice tolerance carries that factor).
    """
    space = inst.space
    n = space.dim
    best = None
    for i in range(n):
        u0 = np.zeros(n)
        u0[i] = 1.0
        u = _slice_minimum(inst, i, u0, 1e-4, 2_000)
        lam_i = inst.rayleigh(u)
        if best is None or lam_i < best[0]:
            best = (lam_i, i, u)
    _, i, u = best
    u = _slice_minimum(inst, i, u, tol / 8.0, 50_000)
    lam = inst.rayleigh(u)
    u = u / space.norm(u)
    return u, lam, eigen_residual(inst, u, lam)


def direct_rayleigh_min(
    inst: ProblemInstance,
    restarts: int = 16,
    tol: float = 1e-8,
    seed: int = DEFAULT_SEED,
) -> OracleResult:
    """Direct minimization of p Phi(u)/||u||^p over the unit sphere.

    Runs ``restarts`` seeded random starts plus the all-ones start at a
    coarse tolerance, keeps the best by (value, start index), then polishes
    it to the requested certificate tolerance.  The certificate is the
    relative dual-norm residual of dPhi(u) - lambda J_p(u).
    """
    space = inst.space
    if space.dim > 256:
        raise DegenerateInputError("direct oracle is limited to dim <= 256")
    if space.kind is SpaceKind.SUP:
        u, lam, cert = _sup_peak_minimum(inst, tol)
        return OracleResult(lam, CoeffVec(u, space), OracleMethod.PROJECTED_GRADIENT, cert)

    rng = np.random.default_rng(seed)
    starts = [np.ones(space.dim)]
    if space.kind is SpaceKind.QUOTIENT_LP:
        starts = [np.linspace(-1.0, 1.0, space.dim)]  # ones is the zero class
    starts += [rng.standard_normal(space.dim) for _ in range(restarts)]

    best = None
    coarse = max(tol, 1e-5)
    for idx, u0 in enumerate(starts):
        try:
            u, lam, _ = _spg(inst, u0, coarse, 800, endgame=False)
        except DegenerateInputError:
            continue
        if best is None or lam < best[0]:
            best = (lam, idx, u)
    if best is None:
        raise DegenerateInputError("all oracle starts were degenerate")
    u, lam, cert = _spg(inst, best[2], tol, 50_000)
    return OracleResult(lam, CoeffVec(u, space), OracleMethod.PROJECTED_GRADIENT, cert)


def oracle_lambda(inst: ProblemInstance, restarts: int = 16, tol: float = 1e-8, seed: int = DEFAULT_SEED) -> OracleResult:
    """Best available independent oracle for an instance.

    Matrix instances use the Jacobi eigensolver; everything else goes
    through direct Rayleigh minimization.
    """
    if inst.kind == "matrix":
        w, v = symmetric_eigs(inst.matrix)
        u = v[:, 0]
        i = int(np.argmax(np.abs(u)))
        if u[i] < 0.0:
            u = -u
        lam = float(w[0])
        return OracleResult(lam, CoeffVec(u, inst.space), OracleMethod.JACOBI_EIG, eigen_residual(inst, u, lam))
    return direct_rayleigh_min(inst, restarts, tol, seed)


def hilbert_closed_form(sigmas, a, k: int | None = None, t: float | None = None) -> np.ndarray:
    """Eigenbasis coordinates of the explicit diagonal-quadratic solutions.

    With spectrum ``sigmas`` (ascending, positive) and initial coordinates
    ``a``, returns a_j sigma_j^(-k) for the iteration or a_j e^(-sigma_j t)
    for the flow; exactly one of k and t must be given.
    """
    sig = np.asarray(sigmas, dtype=float)
    a = np.asarray(a, dtype=float)
    if sig.shape != a.shape or sig.ndim != 1:
        raise DegenerateInputError("sigmas and a must be 1-d arrays of equal length")
    if np.any(sig <= 0.0) or np.any(np.diff(sig) < 0.0):
        raise DegenerateInputError("sigmas must be ascending and positive")
    if (k is None) == (t is None):
        raise DegenerateInputError("give exactly one of k (step) or t (time)")
    if k is not None:
        return a * sig ** (-float(k))
    return a * np.exp(-sig * float(t))
