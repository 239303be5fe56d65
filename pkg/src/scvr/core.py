"""Core primitives: the composition-problem interface, query accounting,
full (deterministic) evaluations, and seeded sampling.

The objective being minimized everywhere in this package is

    f(x) = (1/n) * sum_{i=1..n} F_i( (1/m) * sum_{j=1..m} G_j(x) ),

with x in R^N, the inner map G: R^N -> R^M, and scalar outer components
F_i: R^M -> R.  One *query* is one evaluation of a single component
function or of its derivative (G_j, dG_j, F_i, or grad F_i); the
``QueryLedger`` counts them by kind.

Component indices are 1-based in every public signature (i in 1..n,
j in 1..m); conversion to 0-based array indexing happens inside the
concrete problem classes and nowhere else.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np


class EvaluationError(RuntimeError):
    """A component evaluation produced a non-finite value."""


@dataclass(frozen=True)
class SmoothnessConstants:
    """Problem regularity constants used by step-size and sample-size rules.

    b_g        bound on every inner-component Jacobian norm
    l_g        Lipschitz constant of the inner-component Jacobians
               (0 for affine inner maps)
    b_f        bound on every outer-component gradient norm
    l_f_outer  Lipschitz constant of the outer-component gradients
    l_f        Lipschitz constant of the composite stochastic gradient

    Values may be exact (synthetic fixtures) or empirical estimates; they
    feed parameter suggestions and theory diagnostics, never correctness.
    """

    b_g: float
    l_g: float
    b_f: float
    l_f_outer: float
    l_f: float

    def __post_init__(self) -> None:
        for name in ("b_g", "b_f", "l_f_outer", "l_f"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        # l_g == 0 is legitimate: affine inner maps have constant Jacobians.
        if self.l_g < 0.0:
            raise ValueError("l_g must be non-negative")


@dataclass
class QueryLedger:
    """Counter of component-function evaluations, split by kind.

    Every component evaluation routed through the ``query_*`` helpers
    below increments exactly one category by exactly 1.  The ledger is
    not synchronized; concurrent workers keep private ledgers and
    ``merge`` them.
    """

    inner_value_queries: int = 0
    inner_jacobian_queries: int = 0
    outer_value_queries: int = 0
    outer_gradient_queries: int = 0

    @property
    def total(self) -> int:
        return (
            self.inner_value_queries
            + self.inner_jacobian_queries
            + self.outer_value_queries
            + self.outer_gradient_queries
        )

    def merge(self, other: "QueryLedger") -> None:
        self.inner_value_queries += other.inner_value_queries
        self.inner_jacobian_queries += other.inner_jacobian_queries
        self.outer_value_queries += other.outer_value_queries
        self.outer_gradient_queries += other.outer_gradient_queries

    def copy(self) -> "QueryLedger":
        return QueryLedger(
            self.inner_value_queries,
            self.inner_jacobian_queries,
            self.outer_value_queries,
            self.outer_gradient_queries,
        )


class CompositionProblem(abc.ABC):
    """Interface every concrete two-level finite-sum problem implements.

    Attributes
    ----------
    n_outer : number of outer components F_i
    m_inner : number of inner components G_j
    dim_x   : decision dimension N
    dim_w   : inner-value dimension M
    constants : declared or estimated :class:`SmoothnessConstants`

    Component evaluations must be pure: identical inputs produce
    bitwise-identical outputs.  They are therefore safe to call
    concurrently; only the ledger needs per-worker separation.
    """

    n_outer: int
    m_inner: int
    dim_x: int
    dim_w: int
    constants: SmoothnessConstants

    @abc.abstractmethod
    def inner_component(self, j: int, x: np.ndarray) -> np.ndarray:
        """G_j(x), j in 1..m_inner; returns a length-M vector."""

    @abc.abstractmethod
    def inner_component_jacobian(self, j: int, x: np.ndarray) -> np.ndarray:
        """dG_j(x), j in 1..m_inner; returns an (M, N) matrix."""

    @abc.abstractmethod
    def outer_component(self, i: int, w: np.ndarray) -> float:
        """F_i(w), i in 1..n_outer; returns a scalar."""

    @abc.abstractmethod
    def outer_component_gradient(self, i: int, w: np.ndarray) -> np.ndarray:
        """grad F_i(w), i in 1..n_outer; returns a length-M vector."""


def _check_inner_index(problem: CompositionProblem, j: int) -> None:
    if not 1 <= j <= problem.m_inner:
        raise IndexError(f"inner component index {j} outside 1..{problem.m_inner}")


def _check_outer_index(problem: CompositionProblem, i: int) -> None:
    if not 1 <= i <= problem.n_outer:
        raise IndexError(f"outer component index {i} outside 1..{problem.n_outer}")


def query_inner_value(
    problem: CompositionProblem, j: int, x: np.ndarray, ledger: QueryLedger
) -> np.ndarray:
    """Evaluate G_j(x), charging one inner-value query."""
    _check_inner_index(problem, j)
    ledger.inner_value_queries += 1
    out = problem.inner_component(j, x)
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"inner component {j} returned a non-finite value")
    return out


def query_inner_jacobian(
    problem: CompositionProblem, j: int, x: np.ndarray, ledger: QueryLedger
) -> np.ndarray:
    """Evaluate dG_j(x), charging one inner-Jacobian query."""
    _check_inner_index(problem, j)
    ledger.inner_jacobian_queries += 1
    out = problem.inner_component_jacobian(j, x)
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"inner Jacobian {j} returned a non-finite value")
    return out


def query_outer_value(
    problem: CompositionProblem, i: int, w: np.ndarray, ledger: QueryLedger
) -> float:
    """Evaluate F_i(w), charging one outer-value query."""
    _check_outer_index(problem, i)
    ledger.outer_value_queries += 1
    out = float(problem.outer_component(i, w))
    if not np.isfinite(out):
        raise EvaluationError(f"outer component {i} returned a non-finite value")
    return out


def query_outer_gradient(
    problem: CompositionProblem, i: int, w: np.ndarray, ledger: QueryLedger
) -> np.ndarray:
    """Evaluate grad F_i(w), charging one outer-gradient query."""
    _check_outer_index(problem, i)
    ledger.outer_gradient_queries += 1
    out = problem.outer_component_gradient(i, w)
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"outer gradient {i} returned a non-finite value")
    return out


def inner_full(
    problem: CompositionProblem, x: np.ndarray, ledger: QueryLedger
) -> np.ndarray:
    """Exact inner value G(x) = (1/m) sum_j G_j(x).  Costs m queries."""
    acc = query_inner_value(problem, 1, x, ledger).astype(float, copy=True)
    for j in range(2, problem.m_inner + 1):
        acc += query_inner_value(problem, j, x, ledger)
    return acc / problem.m_inner


def inner_jacobian_full(
    problem: CompositionProblem, x: np.ndarray, ledger: QueryLedger
) -> np.ndarray:
    """Exact mean Jacobian dG(x) = (1/m) sum_j dG_j(x).  Costs m queries."""
    acc = query_inner_jacobian(problem, 1, x, ledger).astype(float, copy=True)
    for j in range(2, problem.m_inner + 1):
        acc += query_inner_jacobian(problem, j, x, ledger)
    return acc / problem.m_inner


def outer_gradient_full(
    problem: CompositionProblem, w: np.ndarray, ledger: QueryLedger
) -> np.ndarray:
    """Exact mean outer gradient grad F(w).  Costs n queries."""
    acc = query_outer_gradient(problem, 1, w, ledger).astype(float, copy=True)
    for i in range(2, problem.n_outer + 1):
        acc += query_outer_gradient(problem, i, w, ledger)
    return acc / problem.n_outer


def full_gradient(
    problem: CompositionProblem, x: np.ndarray, ledger: QueryLedger
) -> np.ndarray:
    """Exact composite gradient (dG(x))^T grad F(G(x)).  Costs 2m+n queries."""
    value = inner_full(problem, x, ledger)
    jac = inner_jacobian_full(problem, x, ledger)
    return jac.T @ outer_gradient_full(problem, value, ledger)


def objective(
    problem: CompositionProblem, x: np.ndarray, ledger: QueryLedger
) -> float:
    """Exact objective value f(x).  Costs m+n queries."""
    value = inner_full(problem, x, ledger)
    acc = query_outer_value(problem, 1, value, ledger)
    for i in range(2, problem.n_outer + 1):
        acc += query_outer_value(problem, i, value, ledger)
    return acc / problem.n_outer


_MASK64 = (1 << 64) - 1


class SampleStream:
    """Deterministic pseudo-random index source.

    Implements the splitmix64 recurrence: starting from the 64-bit seed
    state ``s``, each draw performs

        s  = (s + 0x9E3779B97F4A7C15) mod 2^64
        z  = s
        z ^= z >> 30;  z = (z * 0xBF58476D1CE4E5B9) mod 2^64
        z ^= z >> 27;  z = (z * 0x94D049BB133111EB) mod 2^64
        z ^= z >> 31

    and returns z.  Bounded draws use rejection below the largest
    multiple of the range (``z % k`` after rejecting ``z >= 2^64 - 2^64
    % k``), so indices are exactly uniform.  Identical seed and call
    sequence reproduce identical output on every platform.  A stream is
    single-consumer; share one per worker.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randrange(self, k: int) -> int:
        """Uniform integer in 0..k-1 (rejection sampling, no modulo bias)."""
        if k < 1:
            raise ValueError("range must be at least 1")
        limit = (1 << 64) - ((1 << 64) % k)
        while True:
            z = self.next_u64()
            if z < limit:
                return z % k

    def indices(self, range_max: int, draws: int) -> list[int]:
        """``draws`` indices, each uniform on 1..range_max, with replacement."""
        return [self.randrange(range_max) + 1 for _ in range(draws)]

    def uniform(self) -> float:
        """Uniform float in [0, 1) using the top 53 bits of one draw."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def gauss(self) -> float:
        """Standard normal via Box-Muller on two uniform draws."""
        u1 = self.uniform()
        while u1 <= 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        return float(np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2))

    def normal_vector(self, size: int, scale: float = 1.0) -> np.ndarray:
        return np.array([self.gauss() for _ in range(size)]) * scale


def sample_indices(stream: SampleStream, range_max: int, draws: int) -> list[int]:
    """Multiset of ``draws`` indices uniform on 1..range_max, with replacement.

    Draws are independent; repeats are expected and kept.
    """
    if range_max < 1:
        raise ValueError("range_max must be at least 1")
    if draws < 1:
        raise ValueError("draws must be at least 1")
    return stream.indices(range_max, draws)


def power_iteration_norm(
    matrix: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000
) -> float:
    """Spectral norm of ``matrix`` by power iteration on A^T A.

    Iterates v <- A^T A v / ||.|| until the Rayleigh estimate moves by
    less than ``tol`` relative; deterministic start vector.
    """
    a = np.asarray(matrix, dtype=float)
    ata = a.T @ a
    dim = ata.shape[0]
    v = np.ones(dim) / np.sqrt(dim)
    est = 0.0
    for _ in range(max_iter):
        w = ata @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        new_est = float(v @ (ata @ v))
        if abs(new_est - est) <= tol * max(1.0, abs(new_est)):
            est = new_est
            break
        est = new_est
    return float(np.sqrt(max(est, 0.0)))
