"""Concrete composition problems: analytically tractable synthetics and
the stochastic neighbor-embedding objective, plus data ingestion and
preprocessing (CSV matrices, column normalization, PCA).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from scvr.core import (
    CompositionProblem,
    SmoothnessConstants,
    power_iteration_norm,
)


class MatrixParseError(ValueError):
    """CSV matrix file violates the expected format."""


class ProblemConstructionError(ValueError):
    """Inputs cannot form a valid problem instance."""


# ---------------------------------------------------------------------------
# Synthetic fixtures with exactly computable constants
# ---------------------------------------------------------------------------


class AffineQuadraticProblem(CompositionProblem):
    """Affine inner map with quadratic outer components.

        G_j(x) = A_j x + b_j            F_i(w) = 0.5 * ||w - c_i||^2

    The composite objective is an exact quadratic,

        f(x) = 0.5 * ||Abar x + bbar - cbar||^2 + const,

    with bar quantities the component means, so both the objective and
    its gradient Abar^T (Abar x + bbar - cbar) have closed forms usable
    as oracles.  Constants: the Jacobian bound is max_j ||A_j||_2
    (power iteration), the Jacobians are constant (Lipschitz constant
    0), and each grad F_i is 1-Lipschitz.  The outer gradients are not
    globally bounded; the declared bound is a nominal placeholder used
    only by parameter suggestion.
    """

    def __init__(self, mats: np.ndarray, offs: np.ndarray, targets: np.ndarray):
        mats = np.asarray(mats, dtype=float)
        offs = np.asarray(offs, dtype=float)
        targets = np.asarray(targets, dtype=float)
        if mats.ndim != 3 or offs.ndim != 2 or targets.ndim != 2:
            raise ProblemConstructionError("mats must be (m,M,N); offs (m,M); targets (n,M)")
        if mats.shape[:2] != offs.shape or mats.shape[1] != targets.shape[1]:
            raise ProblemConstructionError("inconsistent component shapes")
        self.mats = mats
        self.offs = offs
        self.targets = targets
        self.m_inner, self.dim_w, self.dim_x = mats.shape
        self.n_outer = targets.shape[0]
        b_g = max(power_iteration_norm(a) for a in mats)
        self.mean_mat = mats.mean(axis=0)
        self.mean_off = offs.mean(axis=0)
        self.mean_target = targets.mean(axis=0)
        self.constants = SmoothnessConstants(
            b_g=b_g, l_g=0.0, b_f=1.0, l_f_outer=1.0, l_f=b_g * b_g
        )

    def inner_component(self, j, x):
        return self.mats[j - 1] @ x + self.offs[j - 1]

    def inner_component_jacobian(self, j, x):
        return self.mats[j - 1].copy()

    def outer_component(self, i, w):
        r = w - self.targets[i - 1]
        return 0.5 * float(r @ r)

    def outer_component_gradient(self, i, w):
        return w - self.targets[i - 1]

    # closed-form oracles ---------------------------------------------------

    def oracle_objective(self, x: np.ndarray) -> float:
        r = self.mean_mat @ x + self.mean_off - self.mean_target
        spread = self.targets - self.mean_target
        return 0.5 * float(r @ r) + 0.5 * float((spread * spread).sum()) / self.n_outer

    def oracle_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.mean_mat.T @ (self.mean_mat @ x + self.mean_off - self.mean_target)

    def minimizer(self) -> np.ndarray:
        """Least-squares stationary point of the quadratic composite."""
        a = self.mean_mat
        rhs = a.T @ (self.mean_target - self.mean_off)
        return np.linalg.solve(a.T @ a, rhs)


def make_affine_quadratic(
    n: int, m: int, dim_x: int, dim_w: int, seed: int = 0, spread: float = 1.0
) -> AffineQuadraticProblem:
    """Random affine-quadratic instance with a well-conditioned mean map."""
    rng = np.random.default_rng(seed)
    mats = rng.normal(size=(m, dim_w, dim_x))
    # lift the mean map's smallest singular value so the minimizer is stable
    mats[0] += np.eye(dim_w, dim_x) * (2.0 * m)
    offs = rng.normal(size=(m, dim_w)) * spread
    targets = rng.normal(size=(n, dim_w)) * spread
    return AffineQuadraticProblem(mats, offs, targets)


def make_balanced_affine(
    m_pairs: int, dim_x: int, dim_w: int, n: int = 3, seed: int = 0
) -> AffineQuadraticProblem:
    """Affine fixture whose component matrices sum to zero.

    Components come in (+A, -A) pairs of differing scale, so the mean
    map is identically zero and single-draw deviations G_j(x) - G_j(y)
    average out exactly.  This is the fixture on which the second-moment
    bound  E||Ghat - G(xt)||^2 <= (B_G^2 / A) ||x - xt||^2  holds with
    strict inequality for every sample count: the mean-difference term
    vanishes, leaving (1/A) * mean_j ||A_j d||^2 < (B_G^2 / A) ||d||^2.
    """
    rng = np.random.default_rng(seed)
    halves = [rng.normal(size=(dim_w, dim_x)) * (0.4 + 1.2 * t) for t in range(m_pairs)]
    mats = []
    for h in halves:
        mats.append(h)
        mats.append(-h)
    offs = rng.normal(size=(2 * m_pairs, dim_w))
    targets = rng.normal(size=(n, dim_w))
    return AffineQuadraticProblem(np.stack(mats), offs, targets)


def _rho(t: np.ndarray) -> np.ndarray:
    t2 = t * t
    return t2 / (1.0 + t2)


def _rho_prime(t: np.ndarray) -> np.ndarray:
    d = 1.0 + t * t
    return 2.0 * t / (d * d)


class NonconvexSyntheticProblem(CompositionProblem):
    """Affine inner map composed with a smooth bounded nonconvex outer.

        G_j(x) = A_j x + b_j
        F_i(w) = sum_l rho(w_l - c_{i,l}),   rho(t) = t^2 / (1 + t^2)

    rho is smooth and nonconvex with |rho'| <= 3*sqrt(3)/8 and
    |rho''| <= 2, giving exactly computable gradient-bound and
    smoothness constants while the landscape keeps genuine non-convex
    structure.  Serves as the benchmark problem for convergence-trend
    comparisons.
    """

    RHO_PRIME_MAX = 3.0 * math.sqrt(3.0) / 8.0
    RHO_SECOND_MAX = 2.0

    def __init__(self, mats: np.ndarray, offs: np.ndarray, targets: np.ndarray):
        mats = np.asarray(mats, dtype=float)
        offs = np.asarray(offs, dtype=float)
        targets = np.asarray(targets, dtype=float)
        self.mats = mats
        self.offs = offs
        self.targets = targets
        self.m_inner, self.dim_w, self.dim_x = mats.shape
        self.n_outer = targets.shape[0]
        b_g = max(power_iteration_norm(a) for a in mats)
        self.mean_mat = mats.mean(axis=0)
        self.mean_off = offs.mean(axis=0)
        self.constants = SmoothnessConstants(
            b_g=b_g,
            l_g=0.0,
            b_f=self.RHO_PRIME_MAX * math.sqrt(self.dim_w),
            l_f_outer=self.RHO_SECOND_MAX,
            l_f=self.RHO_SECOND_MAX * b_g * b_g,
        )

    def inner_component(self, j, x):
        return self.mats[j - 1] @ x + self.offs[j - 1]

    def inner_component_jacobian(self, j, x):
        return self.mats[j - 1].copy()

    def outer_component(self, i, w):
        return float(_rho(w - self.targets[i - 1]).sum())

    def outer_component_gradient(self, i, w):
        return _rho_prime(w - self.targets[i - 1])


def make_nonconvex_synthetic(
    n: int, m: int, dim_x: int, dim_w: int, seed: int = 0
) -> NonconvexSyntheticProblem:
    rng = np.random.default_rng(seed)
    mats = rng.normal(size=(m, dim_w, dim_x)) / math.sqrt(dim_x)
    offs = rng.normal(size=(m, dim_w)) * 0.5
    # targets clustered near the reachable mean so gradients can vanish
    targets = rng.normal(size=(n, dim_w)) * 0.5 + offs.mean(axis=0)
    return NonconvexSyntheticProblem(mats, offs, targets)


class CurvedInnerProblem(CompositionProblem):
    """Inner components with one quadratic coordinate each.

        G_j(x) = A_j x + 0.5 * q_j * ||x||^2 * e_r
        F_i(w) = 0.5 * ||w - c_i||^2

    The Jacobian is A_j + q_j e_r x^T, so Jacobian differences are the
    rank-one matrices q_j e_r (x - y)^T with Frobenius (= spectral) norm
    |q_j| * ||x - y||: the Jacobian-Lipschitz constant is exactly
    max_j |q_j|.  With the q_j summing to zero the mean Jacobian
    difference vanishes, which makes the (1/B)-scaled second-moment
    bound hold strictly; with curvature present the composite-gradient
    estimator is visibly biased, which the oracle tests exploit.
    """

    def __init__(self, mats: np.ndarray, quads: np.ndarray, row: int, targets: np.ndarray):
        self.mats = np.asarray(mats, dtype=float)
        self.quads = np.asarray(quads, dtype=float)
        self.row = int(row)
        self.targets = np.asarray(targets, dtype=float)
        self.m_inner, self.dim_w, self.dim_x = self.mats.shape
        self.n_outer = self.targets.shape[0]
        b_g_lin = max(power_iteration_norm(a) for a in self.mats)
        l_g = float(np.abs(self.quads).max())
        # Jacobian norm grows with ||x||; declared bound is nominal at radius 2
        b_g = b_g_lin + 2.0 * l_g
        self.constants = SmoothnessConstants(
            b_g=b_g, l_g=l_g, b_f=1.0, l_f_outer=1.0, l_f=b_g * b_g
        )

    def inner_component(self, j, x):
        out = self.mats[j - 1] @ x
        out[self.row] += 0.5 * self.quads[j - 1] * float(x @ x)
        return out

    def inner_component_jacobian(self, j, x):
        jac = self.mats[j - 1].copy()
        jac[self.row] += self.quads[j - 1] * x
        return jac

    def outer_component(self, i, w):
        r = w - self.targets[i - 1]
        return 0.5 * float(r @ r)

    def outer_component_gradient(self, i, w):
        return w - self.targets[i - 1]


def make_curved_inner(
    dim_x: int = 3, dim_w: int = 3, n: int = 3, seed: int = 0, scale: float = 1.0
) -> CurvedInnerProblem:
    """Four-component curved fixture with q = scale * (1, -1, 2, -2)."""
    rng = np.random.default_rng(seed)
    mats = rng.normal(size=(4, dim_w, dim_x))
    quads = np.array([1.0, -1.0, 2.0, -2.0]) * scale
    targets = rng.normal(size=(n, dim_w))
    return CurvedInnerProblem(mats, quads, row=0, targets=targets)


# ---------------------------------------------------------------------------
# Neighbor embedding
# ---------------------------------------------------------------------------


class SneProblem(CompositionProblem):
    """Neighbor-embedding objective as a two-level composition.

    Data-side similarities are fixed row-conditional probabilities
    p[t, i] (zero diagonal, each row summing to 1).  The decision
    variable stacks n embedding points of dimension ``embed_dim``
    (N = n * embed_dim); the inner map appends the n kernel normalizer
    sums, so M = N + n:

        G_j(x) = [ x,  n*k(x_1, x_j) - 1, ...,  n*k(x_n, x_j) - 1 ]
        (1/n) sum_j G_j(x) = [ x,  s_1, ..., s_n ],
        s_t = sum_{j != t} k(x_t, x_j),        k(a, b) = exp(-||a - b||^2)

    (the -1 terms cancel the j = t self-similarity k = 1 in the mean).
    The outer components weight squared embedding distances against the
    log normalizers:

        F_i(w) = n * sum_t p[t, i] * ( ||w_t - w_i||^2 + log w_{N+t} ).

    Variance-reduced inner estimates can push a normalizer coordinate
    non-positive; outer evaluations clamp the log argument at
    ``log_floor`` and count the event in ``clamp_events``.

    Smoothness constants are empirical estimates (sampled), suitable for
    parameter suggestion only.
    """

    LOG_FLOOR = 1e-12

    def __init__(self, p_matrix: np.ndarray, embed_dim: int, sigma):
        p = np.asarray(p_matrix, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ProblemConstructionError("p_matrix must be square")
        n = p.shape[0]
        if n < 2:
            raise ProblemConstructionError("need at least two points")
        if np.any(p < 0.0):
            raise ProblemConstructionError("similarities must be non-negative")
        if np.any(np.abs(np.diagonal(p)) > 1e-15):
            raise ProblemConstructionError("self-similarities must be zero")
        row_err = np.abs(p.sum(axis=1) - 1.0)
        if np.any(row_err > 1e-9):
            t = int(np.argmax(row_err))
            raise ProblemConstructionError(f"similarity row {t} does not sum to 1")
        self.p_matrix = p
        self.embed_dim = int(embed_dim)
        self.sigma = sigma
        self.n_points = n
        self.n_outer = n
        self.m_inner = n
        self.dim_x = n * self.embed_dim
        self.dim_w = self.dim_x + n
        self.clamp_events = 0
        self._constants: SmoothnessConstants | None = None
        template = np.zeros((self.dim_w, self.dim_x))
        template[: self.dim_x, : self.dim_x] = np.eye(self.dim_x)
        self._jac_template = template
        self._tail_rows = self.dim_x + np.arange(n)
        self._block_cols = (
            np.arange(n)[:, None] * self.embed_dim + np.arange(self.embed_dim)[None, :]
        )

    @property
    def constants(self) -> SmoothnessConstants:
        if self._constants is None:
            self._constants = self._estimate_constants()
        return self._constants

    def _points(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[: self.dim_x].reshape(self.n_points, self.embed_dim)

    def inner_component(self, j, x):
        pts = self._points(x)
        diff = pts - pts[j - 1]
        kern = np.exp(-(diff * diff).sum(axis=1))
        tail = self.n_points * kern - 1.0
        return np.concatenate([np.asarray(x, dtype=float), tail])

    def inner_component_jacobian(self, j, x):
        n = self.n_points
        pts = self._points(x)
        jac = self._jac_template.copy()
        diff = pts - pts[j - 1]
        kern = np.exp(-(diff * diff).sum(axis=1))
        grad = (-2.0 * n) * kern[:, None] * diff  # d(n*kern_t)/d x_t
        grad[j - 1] = 0.0  # the self-similarity row is constant
        rows = self._tail_rows[:, None]
        jac[rows, self._block_cols] = grad
        jac[rows, self._block_cols[j - 1][None, :]] = -grad
        return jac

    def _clamped_normalizers(self, w: np.ndarray) -> np.ndarray:
        s = np.asarray(w)[self.dim_x :]
        low = s < self.LOG_FLOOR
        if np.any(low):
            self.clamp_events += int(low.sum())
            return np.maximum(s, self.LOG_FLOOR)
        return s

    def outer_component(self, i, w):
        pts = np.asarray(w)[: self.dim_x].reshape(self.n_points, self.embed_dim)
        s = self._clamped_normalizers(w)
        weights = self.p_matrix[:, i - 1]
        diff = pts - pts[i - 1]
        sq = (diff * diff).sum(axis=1)
        return self.n_points * float(weights @ (sq + np.log(s)))

    def outer_component_gradient(self, i, w):
        n, d = self.n_points, self.embed_dim
        pts = np.asarray(w)[: self.dim_x].reshape(n, d)
        s = self._clamped_normalizers(w)
        weights = self.p_matrix[:, i - 1]
        diff = pts - pts[i - 1]
        gblocks = (2.0 * n) * weights[:, None] * diff
        gblocks[i - 1] -= gblocks.sum(axis=0)
        gtail = n * weights / s
        return np.concatenate([gblocks.ravel(), gtail])

    def _estimate_constants(self, samples: int = 6, seed: int = 2024) -> SmoothnessConstants:
        """Sampled estimates of the regularity constants (suggestion only)."""
        rng = np.random.default_rng(seed)
        xs = [rng.normal(size=self.dim_x) * 0.5 for _ in range(samples)]
        b_g = l_g = b_f = l_f_outer = l_f = 0.0
        comps = range(1, self.m_inner + 1)
        for a in range(samples):
            x = xs[a]
            y = xs[(a + 1) % samples]
            dx = float(np.linalg.norm(x - y))
            gx = np.stack([self.inner_component(j, x) for j in comps])
            gy = np.stack([self.inner_component(j, y) for j in comps])
            jx = [self.inner_component_jacobian(j, x) for j in comps]
            jy = [self.inner_component_jacobian(j, y) for j in comps]
            wx, wy = gx.mean(axis=0), gy.mean(axis=0)
            for j in range(self.m_inner):
                b_g = max(b_g, power_iteration_norm(jx[j], tol=1e-6))
                l_g = max(l_g, float(np.linalg.norm(jx[j] - jy[j])) / dx)
            for i in comps:
                fg_x = self.outer_component_gradient(i, wx)
                fg_y = self.outer_component_gradient(i, wy)
                b_f = max(b_f, float(np.linalg.norm(fg_x)))
                l_f_outer = max(
                    l_f_outer,
                    float(np.linalg.norm(fg_x - fg_y)) / max(np.linalg.norm(wx - wy), 1e-12),
                )
                for j in range(self.m_inner):
                    comp = float(np.linalg.norm(jx[j].T @ fg_x - jy[j].T @ fg_y))
                    l_f = max(l_f, comp / dx)
        return SmoothnessConstants(
            b_g=max(b_g, 1e-6),
            l_g=max(l_g, 0.0),
            b_f=max(b_f, 1e-6),
            l_f_outer=max(l_f_outer, 1e-6),
            l_f=max(l_f, 1e-6),
        )

    def to_json(self) -> str:
        sigma = self.sigma
        if isinstance(sigma, np.ndarray):
            sigma = sigma.tolist()
        return json.dumps(
            {
                "n": self.n_points,
                "embed_dim": self.embed_dim,
                "sigma": sigma,
                "p_matrix": self.p_matrix.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SneProblem":
        obj = json.loads(text)
        p = np.asarray(obj["p_matrix"], dtype=float)
        if p.shape != (obj["n"], obj["n"]):
            raise ProblemConstructionError("p_matrix shape disagrees with n")
        sigma = obj["sigma"]
        if isinstance(sigma, list):
            sigma = np.asarray(sigma, dtype=float)
        return cls(p, obj["embed_dim"], sigma)


def build_sne(data, sigma, embed_dim: int = 2) -> SneProblem:
    """Construct the embedding problem from high-dimensional data rows.

    Row-conditional similarities use the Gaussian kernel with per-row
    bandwidth: p[t, i] proportional to exp(-||z_t - z_i||^2 / (2
    sigma_t^2)) for i != t, normalized over i.  ``sigma`` is a positive
    scalar (shared bandwidth) or a length-n vector.  Bandwidth
    calibration (e.g. to a target perplexity) is up to the caller.
    """
    values = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if values.ndim != 2 or values.shape[0] < 2:
        raise ProblemConstructionError("need a 2-D array with at least two rows")
    if not np.all(np.isfinite(values)):
        raise ProblemConstructionError("data contains non-finite entries")
    n = values.shape[0]
    sig = np.asarray(sigma, dtype=float)
    if sig.ndim == 0:
        sig = np.full(n, float(sig))
    if sig.shape != (n,) or np.any(sig <= 0.0):
        raise ProblemConstructionError("sigma must be positive (scalar or length-n)")
    with np.errstate(over="ignore"):  # inf distances fall to the degeneracy check
        sq = ((values[:, None, :] - values[None, :, :]) ** 2).sum(axis=2)
    p = np.zeros((n, n))
    for t in range(n):
        logits = -sq[t] / (2.0 * sig[t] ** 2)
        logits[t] = -np.inf
        top = logits.max()
        if not np.isfinite(top):
            raise ProblemConstructionError(f"similarity row {t} degenerates to zero")
        row = np.exp(logits - top)
        row[t] = 0.0
        denom = row.sum()
        if not np.isfinite(denom) or denom <= 0.0:
            raise ProblemConstructionError(f"similarity row {t} degenerates to zero")
        p[t] = row / denom
    return SneProblem(p, embed_dim, sigma)


# ---------------------------------------------------------------------------
# Data ingestion and preprocessing
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    """Dense real matrix: one sample per row."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise MatrixParseError("dataset must be two-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise MatrixParseError("dataset contains non-finite entries")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def load_matrix(path) -> Dataset:
    """Read a dense CSV matrix (UTF-8, comma-separated decimal floats).

    An optional first line starting with '#' is skipped.  Ragged rows and
    unparseable cells raise :class:`MatrixParseError` naming the location.
    """
    rows: list[list[float]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        width = None
        for lineno, record in enumerate(reader, start=1):
            if lineno == 1 and record and record[0].lstrip().startswith("#"):
                continue
            if not record:
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise MatrixParseError(
                    f"row {lineno}: expected {width} columns, found {len(record)}"
                )
            parsed = []
            for col, cell in enumerate(record, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError as exc:
                    raise MatrixParseError(
                        f"row {lineno}, column {col}: cannot parse {cell!r}"
                    ) from exc
            rows.append(parsed)
    if not rows:
        raise MatrixParseError(f"{path}: no data rows")
    return Dataset(np.asarray(rows))


def save_matrix(data: Dataset, path) -> None:
    """Write a dataset as CSV with shortest round-trippable float text."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for row in data.values:
            writer.writerow([repr(float(v)) for v in row])


def normalize(data: Dataset) -> Dataset:
    """Shift each column to zero mean and unit standard deviation.

    Zero-variance columns are mean-shifted but left unscaled.
    """
    if data.rows < 2:
        raise ValueError("normalization needs at least two rows")
    values = data.values
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    scale = np.where(std > 0.0, std, 1.0)
    return Dataset((values - mean) / scale)


def pca_reduce(data: Dataset, k: int) -> Dataset:
    """Project centered data onto its top-k principal directions.

    The sign of each direction is fixed by making its largest-magnitude
    loading positive, so the projection is deterministic.
    """
    if not 1 <= k <= min(data.rows - 1, data.cols):
        raise ValueError(f"k={k} outside 1..min(rows-1, cols)")
    centered = data.values - data.values.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    directions = vt[:k]
    for r in range(k):
        lead = directions[r, np.argmax(np.abs(directions[r]))]
        if lead < 0.0:
            directions[r] = -directions[r]
    return Dataset(centered @ directions.T)


def make_cluster_data(
    n_points: int, clusters: int = 3, dim: int = 12, seed: int = 0, spread: float = 0.15
) -> tuple[Dataset, np.ndarray]:
    """Synthetic Gaussian clusters; returns the dataset and integer labels."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(clusters, dim)) * 2.0
    labels = np.arange(n_points) % clusters
    points = centers[labels] + rng.normal(size=(n_points, dim)) * spread
    return Dataset(points), labels
