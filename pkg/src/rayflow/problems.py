"""Discretized degree-p homogeneous energies and their gradients.

Each problem instance couples an energy value/gradient pair with the normed
space its Rayleigh quotient is taken in:

* ``MatrixQuadratic``       0.5 u'Au on Euclidean R^n (p = 2 only)
* ``PDirichlet1D``          (h/p) sum |du/h|^p, zero boundary, weighted-Lp norm
* ``PDirichlet2D``          same on a uniform square grid with |grad u|
* ``FractionalSeminorm1D``  (h^2/p) sum_{i!=j} |u_i-u_j|^p / |x_i-x_j|^(1+ps),
                            zero-extended on a collar of n nodes per side
* ``Robin1D``               Dirichlet energy + (beta/p)(|u_1|^p + |u_n|^p),
                            free endpoints, weighted-Lp norm
* ``NeumannQuotient1D``     Dirichlet energy on the quotient-Lp space
* ``SupDirichlet1D``        Dirichlet energy paired with the sup norm
* ``Steklov1D``             full W-type energy (gradient + mass) paired with
                            the boundary trace norm

Gradients are returned in dual coordinates: the array g with
d(value) = sum_i w_i g_i delta_i for the pairing weights w of the space.
Energies are exactly p-homogeneous when the smoothing parameter eps is 0.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DegenerateInputError, NumericsError
from .spaces import (
    Exponent,
    SpaceDescriptor,
    SpaceKind,
    as_array,
    DualVec,
    smoothed_kernel,
)

__all__ = [
    "ProblemInstance",
    "MatrixQuadratic",
    "PDirichlet1D",
    "PDirichlet2D",
    "FractionalSeminorm1D",
    "Robin1D",
    "NeumannQuotient1D",
    "SupDirichlet1D",
    "Steklov1D",
    "assemble",
    "phi_value",
    "phi_gradient",
    "euler_identity_residual",
    "rayleigh_quotient",
]


def _power_sum(t, p, eps):
    """sum of |t|^p, or the eps-smoothed (t^2+eps^2)^(p/2) - eps^p."""
    if eps == 0.0:
        return float(np.sum(np.abs(t) ** p))
    return float(np.sum((t * t + eps * eps) ** (p / 2.0) - eps**p))


class ProblemInstance:
    """Base class: energy value, gradient in dual coordinates, and space."""

    kind = "abstract"

    def __init__(self, exponent: Exponent, space: SpaceDescriptor, eps: float = 0.0):
        if eps < 0.0:
            raise ConfigError("eps: smoothing parameter must be >= 0")
        self.exponent = exponent
        self.space = space
        self.eps = float(eps)

    @property
    def p(self) -> float:
        return self.exponent.p

    def value(self, u) -> float:
        raise NotImplementedError

    def _gradient(self, u) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, u) -> np.ndarray:
        g = self._gradient(self.space.check_dim(u))
        bad = ~np.isfinite(g)
        if bad.any():
            raise NumericsError(f"non-finite gradient entry at index {int(np.argmax(bad))}")
        return g

    def rayleigh(self, u) -> float:
        u = self.space.check_dim(u)
        # homogeneity makes the quotient scale-free: evaluate at max-scaled u
        # so extreme iterate magnitudes never under/overflow the powers
        m = float(np.max(np.abs(u)))
        if m == 0.0:
            raise DegenerateInputError("Rayleigh quotient undefined on the zero element")
        u = u / m
        n = self.space.norm(u)
        if n == 0.0:
            raise DegenerateInputError("Rayleigh quotient undefined on the zero element")
        return self.p * self.value(u) / n**self.p


class MatrixQuadratic(ProblemInstance):
    """0.5 u'Au for a symmetric positive definite A; Euclidean norm, p = 2."""

    kind = "matrix"

    def __init__(self, matrix, eps: float = 0.0):
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError("matrix: must be square")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(a).max()))):
            raise ConfigError("matrix: must be symmetric")
        try:
            np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise ConfigError("matrix: must be positive definite") from None
        self.matrix = a
        exp = Exponent(2.0)
        space = SpaceDescriptor(SpaceKind.WEIGHTED_LP, a.shape[0], exp, weight=1.0)
        super().__init__(exp, space, eps)

    def value(self, u) -> float:
        u = self.space.check_dim(u)
        return 0.5 * float(u @ self.matrix @ u)

    def _gradient(self, u) -> np.ndarray:
        return self.matrix @ u


class _Dirichlet1DBase(ProblemInstance):
    """Shared forward-difference machinery for the 1D gradient energies."""

    #: pad the vector with zero boundary values before differencing
    zero_padded = True

    def __init__(self, n, L, exponent, space, eps):
        super().__init__(exponent, space, eps)
        self.n = int(n)
        self.L = float(L)
        self.h = L / (n + 1) if self.zero_padded else L / (n - 1)

    def _diffs(self, u) -> np.ndarray:
        if self.zero_padded:
            u = np.concatenate(([0.0], u, [0.0]))
        return np.diff(u) / self.h

    def _dirichlet_value(self, u) -> float:
        return (self.h / self.p) * _power_sum(self._diffs(u), self.p, self.eps)

    def _dirichlet_grad_euclid(self, u) -> np.ndarray:
        k = smoothed_kernel(self._diffs(u), self.p, self.eps)
        if self.zero_padded:
            return k[:-1] - k[1:]
        g = np.zeros_like(u)
        g[:-1] -= k
        g[1:] += k
        return g


class PDirichlet1D(_Dirichlet1DBase):
    """p-Dirichlet energy on (0, L) with zero boundary, n interior nodes."""

    kind = "pdirichlet1d"
    zero_padded = True

    def __init__(self, p, n, L=1.0, eps=0.0):
        exp = Exponent(p)
        h = L / (n + 1)
        space = SpaceDescriptor(SpaceKind.WEIGHTED_LP, n, exp, weight=h)
        super().__init__(n, L, exp, space, eps)

    def value(self, u) -> float:
        return self._dirichlet_value(self.space.check_dim(u))

    def _gradient(self, u) -> np.ndarray:
        return self._dirichlet_grad_euclid(u) / self.h


class SupDirichlet1D(PDirichlet1D):
    """p-Dirichlet energy paired with the sup norm (requires p > n = 1)."""

    kind = "supdirichlet1d"

    def __init__(self, p, n, L=1.0, eps=0.0):
        exp = Exponent(p)
        space = SpaceDescriptor(SpaceKind.SUP, n, exp)
        _Dirichlet1DBase.__init__(self, n, L, exp, space, eps)

    def _gradient(self, u) -> np.ndarray:
        # sup-space pairing weights are 1, so dual coordinates are Euclidean
        return self._dirichlet_grad_euclid(u)


class Robin1D(_Dirichlet1DBase):
    """Dirichlet energy plus boundary term (beta/p)(|u_1|^p + |u_n|^p).

    Free endpoints: n nodes spanning [0, L], h = L/(n-1).
    """

    kind = "robin1d"
    zero_padded = False

    def __init__(self, p, n, L=1.0, beta=1.0, eps=0.0):
        if beta <= 0.0:
            raise ConfigError("beta: Robin parameter must be > 0")
        exp = Exponent(p)
        h = L / (n - 1)
        space = SpaceDescriptor(SpaceKind.WEIGHTED_LP, n, exp, weight=h)
        super().__init__(n, L, exp, space, eps)
        self.beta = float(beta)

    def value(self, u) -> float:
        u = self.space.check_dim(u)
        ends = np.array([u[0], u[-1]])
        return self._dirichlet_value(u) + (self.beta / self.p) * _power_sum(ends, self.p, self.eps)

    def _gradient(self, u) -> np.ndarray:
        g = self._dirichlet_grad_euclid(u)
        g[0] += self.beta * smoothed_kernel(u[0], self.p, self.eps)
        g[-1] += self.beta * smoothed_kernel(u[-1], self.p, self.eps)
        return g / self.h


class NeumannQuotient1D(_Dirichlet1DBase):
    """Dirichlet energy with free endpoints on the quotient-Lp space."""

    kind = "neumann1d"
    zero_padded = False

    def __init__(self, p, n, L=1.0, eps=0.0):
        exp = Exponent(p)
        h = L / (n - 1)
        space = SpaceDescriptor(SpaceKind.QUOTIENT_LP, n, exp, weight=h)
        super().__init__(n, L, exp, space, eps)

    def value(self, u) -> float:
        return self._dirichlet_value(self.space.check_dim(u))

    def _gradient(self, u) -> np.ndarray:
        return self._dirichlet_grad_euclid(u) / self.h


class Steklov1D(_Dirichlet1DBase):
    """Gradient-plus-mass energy paired with the two-endpoint trace norm."""

    kind = "steklov1d"
    zero_padded = False

    def __init__(self, p, n, L=1.0, eps=0.0):
        exp = Exponent(p)
        h = L / (n - 1)
        space = SpaceDescriptor(
            SpaceKind.TRACE_BOUNDARY, n, exp, weight=h, boundary=(0, n - 1)
        )
        super().__init__(n, L, exp, space, eps)

    def value(self, u) -> float:
        u = self.space.check_dim(u)
        return self._dirichlet_value(u) + (self.h / self.p) * _power_sum(u, self.p, self.eps)

    def _gradient(self, u) -> np.ndarray:
        g = self._dirichlet_grad_euclid(u) + self.h * smoothed_kernel(u, self.p, self.eps)
        return g / self.space.pairing_weights()


class PDirichlet2D(ProblemInstance):
    """p-Dirichlet energy on a uniform n x n interior grid of (0, L)^2.

    Zero boundary; cell-centered forward differences in both axes give the
    gradient magnitude. Vectors are stored row-major with dim = n^2.
    """

    kind = "pdirichlet2d"

    def __init__(self, p, n, L=1.0, eps=0.0):
        exp = Exponent(p)
        h = L / (n + 1)
        space = SpaceDescriptor(SpaceKind.WEIGHTED_LP, n * n, exp, weight=h * h)
        super().__init__(exp, space, eps)
        self.n = int(n)
        self.L = float(L)
        self.h = h

    def _padded(self, u) -> np.ndarray:
        g = np.zeros((self.n + 2, self.n + 2))
        g[1:-1, 1:-1] = u.reshape(self.n, self.n)
        return g

    def _cells(self, u):
        g = self._padded(u)
        dx = (g[1:, :-1] - g[:-1, :-1]) / self.h
        dy = (g[:-1, 1:] - g[:-1, :-1]) / self.h
        return dx, dy

    def value(self, u) -> float:
        dx, dy = self._cells(self.space.check_dim(u))
        m2 = dx * dx + dy * dy + self.eps * self.eps
        total = np.sum(m2 ** (self.p / 2.0) - self.eps**self.p)
        return (self.h * self.h / self.p) * float(total)

    def _gradient(self, u) -> np.ndarray:
        dx, dy = self._cells(u)
        m2 = dx * dx + dy * dy + self.eps * self.eps
        # |grad u|^(p-2) grad u tends to 0 with grad u for p > 1; mask the
        # zero cells so the p < 2 power does not produce inf * 0
        w = np.where(m2 > 0.0, m2, 1.0) ** ((self.p - 2.0) / 2.0)
        w = np.where(m2 > 0.0, w, 0.0)
        ex, ey = w * dx, w * dy
        g = np.zeros((self.n + 2, self.n + 2))
        g[1:, :-1] += ex
        g[:-1, :-1] -= ex
        g[:-1, 1:] += ey
        g[:-1, :-1] -= ey
        # euclid gradient carries one factor h; dual coordinates divide by h^2
        return g[1:-1, 1:-1].ravel() / self.h


class FractionalSeminorm1D(ProblemInstance):
    """Discrete fractional (s, p) seminorm with zero exterior extension.

    Interior nodes x_j = j h, j = 1..n, h = L/(n+1); the zero extension is
    truncated to a collar of n nodes on each side.  The diagonal i = j is
    excluded, matching the principal-value integral.
    """

    kind = "fractional1d"

    def __init__(self, p, n, L=1.0, s=0.5, eps=0.0):
        if not (0.0 < s < 1.0):
            raise ConfigError("s: fractional order must lie in (0, 1)")
        exp = Exponent(p)
        h = L / (n + 1)
        space = SpaceDescriptor(SpaceKind.WEIGHTED_LP, n, exp, weight=h)
        super().__init__(exp, space, eps)
        self.n = int(n)
        self.L = float(L)
        self.s = float(s)
        self.h = h
        idx = np.arange(1 - n, 2 * n + 1)  # collar | interior | collar
        x = idx * h
        d = np.abs(x[:, None] - x[None, :])
        np.fill_diagonal(d, 1.0)
        self._kernel = 1.0 / d ** (1.0 + p * s)
        np.fill_diagonal(self._kernel, 0.0)
        self._interior = slice(n - 1, 2 * n - 1)

    def _extended(self, u) -> np.ndarray:
        z = np.zeros(3 * self.n)
        z[self._interior] = u
        return z

    def value(self, u) -> float:
        z = self._extended(self.space.check_dim(u))
        diff = z[:, None] - z[None, :]
        if self.eps == 0.0:
            total = np.sum(np.abs(diff) ** self.p * self._kernel)
        else:
            phi = (diff * diff + self.eps * self.eps) ** (self.p / 2.0) - self.eps**self.p
            total = np.sum(phi * self._kernel)
        return (self.h * self.h / self.p) * float(total)

    def _gradient(self, u) -> np.ndarray:
        z = self._extended(u)
        diff = z[:, None] - z[None, :]
        k = smoothed_kernel(diff, self.p, self.eps) * self._kernel
        # ordered pairs (i,j) and (j,i) both contribute; dual coords divide by h
        return 2.0 * self.h * np.sum(k[self._interior], axis=1)


_KINDS = {
    cls.kind: cls
    for cls in (
        MatrixQuadratic,
        PDirichlet1D,
        PDirichlet2D,
        FractionalSeminorm1D,
        Robin1D,
        NeumannQuotient1D,
        SupDirichlet1D,
        Steklov1D,
    )
}

_KIND_KEYS = {
    "matrix": {"matrix", "diag", "p"},
    "pdirichlet1d": {"p", "n", "L"},
    "pdirichlet2d": {"p", "n", "L"},
    "fractional1d": {"p", "n", "L", "s"},
    "robin1d": {"p", "n", "L", "beta"},
    "neumann1d": {"p", "n", "L"},
    "supdirichlet1d": {"p", "n", "L"},
    "steklov1d": {"p", "n", "L"},
}


def assemble(config: dict) -> ProblemInstance:
    """Build a problem instance from a flat key-value description.

    Recognized keys: kind, p, n, L, s, beta, eps, seed, matrix, diag.
    Unknown keys and out-of-range values raise ConfigError naming the key.
    """
    cfg = dict(config)
    kind = cfg.pop("kind", None)
    if kind not in _KINDS:
        raise ConfigError(f"kind: unknown instance kind {kind!r}")
    allowed = _KIND_KEYS[kind] | {"eps", "seed"}
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"{key}: unknown key for kind {kind!r}")
    seed = cfg.pop("seed", None)

    def as_float(key, default=None):
        raw = cfg.pop(key, default)
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None

    eps = as_float("eps", 0.0)
    if eps < 0.0:
        raise ConfigError("eps: smoothing parameter must be >= 0")

    if kind == "matrix":
        if "p" in cfg and as_float("p") != 2.0:
            raise ConfigError("p: matrix instances require p = 2")
        if "diag" in cfg and "matrix" in cfg:
            raise ConfigError("matrix: give either 'matrix' or 'diag', not both")
        if "diag" in cfg:
            a = np.diag(np.asarray(cfg.pop("diag"), dtype=float))
        elif "matrix" in cfg:
            a = np.asarray(cfg.pop("matrix"), dtype=float)
        else:
            raise ConfigError("matrix: missing 'matrix' or 'diag' entries")
        inst = MatrixQuadratic(a, eps=eps)
    else:
        p = as_float("p")
        if not (p > 1.0):
            raise ConfigError(f"p: must be > 1, got {p}")
        n_raw = cfg.pop("n", None)
        try:
            n = int(n_raw)
            ok = n == float(n_raw) and n >= 1
        except (TypeError, ValueError):
            ok = False
        if not ok:
            raise ConfigError(f"n: must be a positive integer, got {n_raw}")
        L = as_float("L", 1.0)
        if L <= 0.0:
            raise ConfigError(f"L: must be > 0, got {L}")
        kwargs = {"p": p, "n": n, "L": L, "eps": eps}
        if kind == "fractional1d":
            kwargs["s"] = as_float("s", 0.5)
        if kind == "robin1d":
            kwargs["beta"] = as_float("beta", 1.0)
        if kind in ("robin1d", "neumann1d", "steklov1d") and n < 2:
            raise ConfigError(f"n: kind {kind!r} needs n >= 2, got {n}")
        inst = _KINDS[kind](**kwargs)
    inst.seed = seed
    return inst


def phi_value(inst: ProblemInstance, u) -> float:
    """Energy value of the instance at u."""
    return inst.value(as_array(u))


def phi_gradient(inst: ProblemInstance, u) -> DualVec:
    """Energy gradient at u as a dual vector under the space's pairing."""
    return DualVec(inst.gradient(as_array(u)), inst.space)


def euler_identity_residual(inst: ProblemInstance, u) -> float:
    """|p Phi(u) - <grad Phi(u), u>| / max(1, p Phi(u)); exact homogeneity check."""
    u = inst.space.check_dim(u)
    pphi = inst.p * inst.value(u)
    paired = inst.space.pairing(inst.gradient(u), u)
    return abs(pphi - paired) / max(1.0, abs(pphi))


def rayleigh_quotient(inst: ProblemInstance, u) -> float:
    """p Phi(u) / ||u||^p for nonzero u."""
    return inst.rayleigh(as_array(u))
