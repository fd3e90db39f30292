"""Smooth data-fit terms L with known curvature constants.

Each loss exposes value, gradient, and convexity_constants() returning
(mu, nu) such that

    (mu/2) ||v - w||^2 <= L(v) - L(w) - <grad L(w), v - w> <= (nu/2) ||v - w||^2.

For the least-squares loss the constants are the extreme eigenvalues of
A^T A, obtained from a lazily cached SVD of A; when A has a nontrivial
null space (fewer rows than columns, or numerically rank deficient) mu is
reported as exactly 0 and strong convexity only holds on the row space,
so rate diagnostics that rely on mu > 0 should be skipped.
"""

import numpy as np

__all__ = ["QuadraticDenoise", "LeastSquares", "ScaledQuadratic"]

# relative cutoff below which a singular value counts as zero
RANK_TOL = 1e-10


class SmoothLoss:
    """Interface shared by the concrete losses."""

    dim = None

    def _check(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dim,):
            raise ValueError(f"expected argument of shape ({self.dim},)")
        return w

    def value(self, w):
        raise NotImplementedError

    def grad(self, w):
        raise NotImplementedError

    def convexity_constants(self):
        """(mu, nu): strong convexity and smoothness moduli."""
        raise NotImplementedError


class QuadraticDenoise(SmoothLoss):
    """L(w) = 0.5 ||w - target||^2, with mu = nu = 1."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=float)
        if self.target.ndim != 1:
            raise ValueError("target must be a vector")
        self.dim = self.target.size

    def value(self, w):
        w = self._check(w)
        return 0.5 * float(np.sum((w - self.target) ** 2))

    def grad(self, w):
        w = self._check(w)
        return w - self.target

    def convexity_constants(self):
        return (1.0, 1.0)


class ScaledQuadratic(SmoothLoss):
    """L(w) = gamma ||w - target||^2, with mu = nu = 2 gamma.

    The smooth half of objectives that pair a weak quadratic pull toward a
    reference point with a nonsmooth penalty handled elsewhere.
    """

    def __init__(self, target, gamma):
        if gamma <= 0.0:
            raise ValueError("gamma must be positive")
        self.target = np.asarray(target, dtype=float)
        if self.target.ndim != 1:
            raise ValueError("target must be a vector")
        self.gamma = float(gamma)
        self.dim = self.target.size

    def value(self, w):
        w = self._check(w)
        return self.gamma * float(np.sum((w - self.target) ** 2))

    def grad(self, w):
        w = self._check(w)
        return 2.0 * self.gamma * (w - self.target)

    def convexity_constants(self):
        return (2.0 * self.gamma, 2.0 * self.gamma)


class LeastSquares(SmoothLoss):
    """L(w) = 0.5 ||A w - b||^2 with a lazily cached SVD of A."""

    def __init__(self, matrix, rhs):
        self.matrix = np.asarray(matrix, dtype=float)
        self.rhs = np.asarray(rhs, dtype=float)
        if self.matrix.ndim != 2:
            raise ValueError("measurement matrix must be two-dimensional")
        if self.rhs.shape != (self.matrix.shape[0],):
            raise ValueError(
                f"rhs shape {self.rhs.shape} does not match "
                f"{self.matrix.shape[0]} matrix rows"
            )
        self.dim = self.matrix.shape[1]
        self._svd = None

    def svd(self):
        """Reduced SVD (u, s, vt) of A, computed once on first use."""
        if self._svd is None:
            self._svd = np.linalg.svd(self.matrix, full_matrices=False)
        return self._svd

    def value(self, w):
        w = self._check(w)
        r = self.matrix @ w - self.rhs
        return 0.5 * float(np.sum(r * r))

    def grad(self, w):
        w = self._check(w)
        return self.matrix.T @ (self.matrix @ w - self.rhs)

    @property
    def strongly_convex(self):
        """True when A^T A is (numerically) positive definite."""
        _, s, _ = self.svd()
        return self.matrix.shape[0] >= self.dim and s[-1] > RANK_TOL * s[0]

    def convexity_constants(self):
        _, s, _ = self.svd()
        nu = float(s[0] ** 2)
        mu = float(s[-1] ** 2) if self.strongly_convex else 0.0
        return (mu, nu)
