"""Concrete objectives: interpolating quadratics, squared-hinge classification on
Gaussian blobs and a separable quartic, plus the blob generator and CSV I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .core import RngStream
from .oracles import StochasticObjective


class InterpolatingQuadratic(StochasticObjective):
    """``F(x, i) = 0.5 * ||A_i (x - x_star)||^2``; every component is minimised at ``x_star``.

    ``rho`` is the variance-based growth constant and ``rho_moment`` the
    moment-based one, both relative to ``L`` (the smoothness of ``f``) and
    taken over all of R^d, so they are exact whenever ``x_star`` is interior.
    """

    def __init__(self, A, x_star):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 3 or A.shape[2] != np.asarray(x_star).shape[0]:
            raise ValueError(f"A must have shape (n, m, d), got {A.shape}")
        self.A = A
        self.n, _, self.d = A.shape
        self.x_star = np.asarray(x_star, dtype=np.float64).copy()
        self.f_star = 0.0
        self.H = np.einsum("nki,nkj->nij", A, A)
        self._H_flat = self.H.reshape(self.n, -1)
        self.H_mean = self.H.mean(axis=0)
        self.L = float(np.linalg.eigvalsh(self.H_mean)[-1])
        self.L_max = float(max(np.linalg.eigvalsh(h)[-1] for h in self.H))
        dev = self.H - self.H_mean
        var_op = np.einsum("nij,njk->ik", dev, dev) / self.n
        mom_op = np.einsum("nij,njk->ik", self.H, self.H) / self.n
        # ratio of quadratic forms in delta = x - x_star: delta' M delta / (L delta' Hbar delta)
        self.rho = self._max_ratio(var_op)
        self.rho_moment = self._max_ratio(mom_op)

    def _max_ratio(self, M) -> float:
        M = 0.5 * (M + M.T)
        if not np.any(M):
            return 0.0
        top = scipy.linalg.eigh(M, self.H_mean, eigvals_only=True)[-1]
        return float(max(top, 0.0) / self.L)

    def value(self, x):
        delta = np.asarray(x) - self.x_star
        return 0.5 * float(delta @ self.H_mean @ delta)

    def grad(self, x):
        return self.H_mean @ (np.asarray(x) - self.x_star)

    def component_values_at(self, X, idx):
        X = np.asarray(X)
        idx = np.asarray(idx)
        out = np.empty(idx.shape[0])
        order = np.argsort(idx, kind="stable")
        bounds = np.searchsorted(idx[order], np.arange(self.n + 1))
        for i in range(self.n):
            rows = order[bounds[i]:bounds[i + 1]]
            if rows.size:
                Z = (X[rows] - self.x_star) @ self.A[i].T
                out[rows] = 0.5 * np.einsum("ij,ij->i", Z, Z)
        return out

    def component_value(self, x, i):
        z = self.A[i] @ (np.asarray(x) - self.x_star)
        return 0.5 * float(z @ z)

    def component_values(self, x, idx):
        delta = np.asarray(x) - self.x_star
        Z = self.A @ delta
        vals = 0.5 * np.einsum("ij,ij->i", Z, Z)
        return vals[np.asarray(idx)]

    def component_grads(self, x, idx):
        delta = np.asarray(x) - self.x_star
        return self.H[np.asarray(idx)] @ delta

    def batch_grad(self, x, idx):
        counts = np.bincount(idx, minlength=self.n).astype(np.float64)
        Hb = (counts @ self._H_flat).reshape(self.d, self.d)
        return Hb @ (np.asarray(x) - self.x_star) / len(idx)

    def exact_line_search(self, x, direction):
        delta = np.asarray(x) - self.x_star
        curv = float(direction @ self.H_mean @ direction)
        if curv <= 0.0:
            return 1.0 if float(direction @ self.H_mean @ delta) < 0 else 0.0
        return float(np.clip(-(direction @ self.H_mean @ delta) / curv, 0.0, 1.0))


def random_orthogonal(d: int, rng: RngStream) -> np.ndarray:
    q, r = np.linalg.qr(rng.generator.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def make_quadratic(n: int, d: int, condition: float, x_star, rng: RngStream,
                   scale: float = 1.0) -> InterpolatingQuadratic:
    """Random interpolating quadratic whose component Hessians have spectrum in
    ``[scale / condition, scale]`` (singular values of ``A_i`` in
    ``[sqrt(scale / condition), sqrt(scale)]``)."""
    if condition < 1:
        raise ValueError(f"condition must be >= 1, got {condition}")
    lo, hi = math.sqrt(scale / condition), math.sqrt(scale)
    A = np.empty((n, d, d))
    for i in range(n):
        s = rng.generator.uniform(lo, hi, size=d)
        s[0], s[-1] = hi, lo
        A[i] = s[:, None] * random_orthogonal(d, rng).T
    return InterpolatingQuadratic(A, x_star)


def default_x_star(d: int, radius: float = 1.0) -> np.ndarray:
    x = np.zeros(d)
    x[0] = 0.3 * radius
    return x


class HingeSquaredObjective(StochasticObjective):
    """``F(w, i) = max(0, 1 - y_i <w, x_i>)^2``."""

    def __init__(self, X, y, f_star: Optional[float] = None):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ValueError("X must be (n, d) and y must have length n")
        self.n, self.d = self.X.shape
        self.f_star = f_star
        self._yX = self.y[:, None] * self.X
        self.L = 2.0 * float(np.linalg.eigvalsh(self.X.T @ self.X / self.n)[-1])
        self.L_max = 2.0 * float(np.max(np.sum(self.X * self.X, axis=1)))
        self.rho = self.L_max / self.L

    def _residuals(self, w):
        return np.maximum(0.0, 1.0 - self._yX @ w)

    def value(self, w):
        r = self._residuals(np.asarray(w))
        return float(r @ r) / self.n

    def grad(self, w):
        r = self._residuals(np.asarray(w))
        return -2.0 * (self._yX.T @ r) / self.n

    def component_values_at(self, W, idx):
        m = np.einsum("ij,ij->i", np.asarray(W), self._yX[idx])
        r = np.maximum(0.0, 1.0 - m)
        return r * r

    def component_values(self, w, idx):
        r = np.maximum(0.0, 1.0 - self._yX[idx] @ np.asarray(w))
        return r * r

    def component_grads(self, w, idx):
        rows = self._yX[np.asarray(idx)]
        r = np.maximum(0.0, 1.0 - rows @ np.asarray(w))
        return -2.0 * r[:, None] * rows

    def batch_grad(self, w, idx):
        rows = self._yX[idx]
        r = np.maximum(0.0, 1.0 - rows @ np.asarray(w))
        return -2.0 * (rows.T @ r) / len(idx)

    def exact_line_search(self, w, direction):
        # phi(g) = mean(max(0, a - g s)^2) is convex piecewise quadratic; bisect on phi'.
        a = 1.0 - self._yX @ np.asarray(w)
        s = self._yX @ np.asarray(direction)

        def slope(g):
            return -2.0 * float(np.maximum(0.0, a - g * s) @ s)

        if slope(0.0) >= 0.0:
            return 0.0
        if slope(1.0) <= 0.0:
            return 1.0
        lo, hi = 0.0, 1.0
        g = 0.5
        for _ in range(100):
            # Newton step on the active pieces, falling back to bisection
            active = (a - g * s) > 0
            curv = 2.0 * float(s[active] @ s[active])
            sl = slope(g)
            if sl > 0:
                hi = g
            else:
                lo = g
            if sl == 0.0 or hi - lo < 1e-15:
                break
            g_new = g - sl / curv if curv > 0 else 0.5 * (lo + hi)
            g = g_new if lo < g_new < hi else 0.5 * (lo + hi)
        return g


def hinge_sq_value_grad(obj: HingeSquaredObjective, w, i: int):
    if not 0 <= i < obj.n:
        raise IndexError(f"component index {i} outside [0, {obj.n})")
    return float(obj.component_values(w, [i])[0]), obj.component_grads(w, [i])[0]


@dataclass
class BlobsConfig:
    n: int = 2000
    d: int = 50
    mean_shift: float = 2.0
    sigma: float = 1.0
    separable: bool = True
    margin_floor: float = 0.1
    feature_scale: Optional[float] = None
    seed: int = 0
    max_resamples: int = 200

    def scale(self) -> float:
        return self.feature_scale if self.feature_scale is not None else 1.0 / self.margin_floor


def generate_blobs(config: BlobsConfig):
    """Two isotropic Gaussian blobs with means ``+-mean_shift * e_1``.

    Returns ``(X, y, certificate)``. For separable data, points whose margin
    along ``e_1`` falls under ``margin_floor`` are redrawn, features are scaled
    by ``1 / margin_floor`` and the certificate is ``w0 = e_1``, which has unit
    L1 norm and functional margin at least 1. Otherwise the certificate is None.
    """
    if config.n < 2 or config.d < 2:
        raise ValueError("blobs need n >= 2 and d >= 2")
    rng = RngStream(config.seed, 0).generator
    n, d = config.n, config.d
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    centre = np.zeros(d)
    centre[0] = config.mean_shift

    def draw(labels):
        return labels[:, None] * centre + config.sigma * rng.standard_normal((labels.shape[0], d))

    X = draw(y)
    if config.separable:
        floor = config.margin_floor * (1.0 + 1e-9)
        for _ in range(config.max_resamples):
            bad = y * X[:, 0] < floor
            if not bad.any():
                break
            X[bad] = draw(y[bad])
        else:
            raise ValueError("could not make the blobs separable; use a larger mean_shift "
                             "or a smaller margin_floor")
    X *= config.scale()
    certificate = None
    if config.separable:
        certificate = np.zeros(d)
        certificate[0] = 1.0
        if np.min(y * (X @ certificate)) < 1.0:
            raise ValueError("feature_scale too small for a unit-L1 separator with margin 1")
    return X, y, certificate


def certify_separable(X, y, radius: float = 1.0) -> Optional[np.ndarray]:
    """Find ``w`` with ``||w||_1 <= radius`` and ``y_i <w, x_i> >= 1`` by LP, or None."""
    from scipy.optimize import linprog

    n, d = X.shape
    yX = np.asarray(y)[:, None] * X
    # w = p - q with p, q >= 0
    A_ub = np.vstack([np.hstack([-yX, yX]), np.ones((1, 2 * d))])
    b_ub = np.concatenate([-np.ones(n), [radius]])
    res = linprog(np.zeros(2 * d), A_ub=A_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    w = res.x[:d] - res.x[d:]
    if np.abs(w).sum() > radius * (1 + 1e-9) or np.min(yX @ w) < 1.0 - 1e-9:
        return None
    return w


def save_dataset_csv(path, X, y):
    n, d = X.shape
    with open(path, "w", newline="") as fh:
        fh.write(",".join([f"x_{j + 1}" for j in range(d)] + ["y"]) + "\n")
        for row, label in zip(X, y):
            fh.write(",".join(format(v, ".17g") for v in row) + "," + format(label, ".17g") + "\n")


def load_dataset_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "y":
            raise ValueError(f"{path}: last column must be 'y'")
        rows = np.array([[float(v) for v in r] for r in reader if r], dtype=np.float64)
    return rows[:, :-1], rows[:, -1]


class QuarticObjective(StochasticObjective):
    """``F(x, i) = sum_j (0.25 * w_ij * x_j^4 + 0.5 * x_j^2)``.

    Not globally smooth: ``L`` and ``L_max`` are the Hessian bounds on the box
    ``||x||_inf <= radius``, which is where callers must keep their queries.
    """

    def __init__(self, weights, radius: float, f_star: float = 0.0):
        self.W = np.asarray(weights, dtype=np.float64)
        self.n, self.d = self.W.shape
        if np.any(self.W < 0):
            raise ValueError("quartic weights must be non-negative")
        self.radius = float(radius)
        self.w_mean = self.W.mean(axis=0)
        self.L = 1.0 + 3.0 * float(self.w_mean.max()) * radius**2
        self.L_max = 1.0 + 3.0 * float(self.W.max()) * radius**2
        self.f_star = f_star
        self.x_star = np.zeros(self.d)

    def value(self, x):
        x = np.asarray(x)
        return float(0.25 * self.w_mean @ x**4 + 0.5 * x @ x)

    def grad(self, x):
        x = np.asarray(x)
        return self.w_mean * x**3 + x

    def smoothed_grad(self, x, nu):
        """Gradient of ``E f(x + nu u)``, ``u ~ N(0, I)``, in closed form."""
        x = np.asarray(x)
        return self.w_mean * (x**3 + 3.0 * nu**2 * x) + x

    def component_values_at(self, X, idx):
        X = np.asarray(X)
        return 0.25 * np.einsum("ij,ij->i", self.W[idx], X**4) + 0.5 * np.einsum("ij,ij->i", X, X)

    def component_grads(self, x, idx):
        x = np.asarray(x)
        return self.W[np.asarray(idx)] * x**3 + x
