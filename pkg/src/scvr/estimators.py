"""Variance-reduced estimators for the inner value, the inner Jacobian,
and the composite gradient.

Every estimator follows the correction pattern

    fresh term  -  same term at the epoch snapshot  +  cached full quantity,

so that at the snapshot point the corrections cancel exactly and the
estimator returns the cached full gradient bit for bit.  Batches are
index multisets (1-based, with replacement) materialized by the caller,
which lets tests replay a draw through the exhaustive oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from scvr.core import (
    CompositionProblem,
    QueryLedger,
    inner_full,
    inner_jacobian_full,
    outer_gradient_full,
    query_inner_jacobian,
    query_inner_value,
    query_outer_gradient,
)


@dataclass
class EpochSnapshot:
    """Per-epoch cached quantities at the reference point.

    g_tilde, jac_tilde and grad_tilde are the exact inner value, mean
    Jacobian and composite gradient at x_tilde.
    """

    x_tilde: np.ndarray
    g_tilde: np.ndarray
    jac_tilde: np.ndarray
    grad_tilde: np.ndarray


@dataclass
class GradientEstimate:
    direction: np.ndarray
    queries_charged: int


def take_snapshot(
    problem: CompositionProblem, x: np.ndarray, ledger: QueryLedger
) -> EpochSnapshot:
    """Compute the epoch cache at x.  Costs exactly 2m + n queries."""
    x = np.array(x, dtype=float, copy=True)
    g = inner_full(problem, x, ledger)
    jac = inner_jacobian_full(problem, x, ledger)
    grad = jac.T @ outer_gradient_full(problem, g, ledger)
    return EpochSnapshot(x_tilde=x, g_tilde=g, jac_tilde=jac, grad_tilde=grad)


def _require_batch(batch: Sequence[int]) -> None:
    if len(batch) == 0:
        raise ValueError("batch must contain at least one index")


def estimate_inner(
    problem: CompositionProblem,
    x: np.ndarray,
    snap: EpochSnapshot,
    batch: Sequence[int],
    ledger: QueryLedger,
) -> np.ndarray:
    """Variance-reduced inner value at x from a size-A batch over 1..m.

        (1/A) sum_{j in batch} (G_j(x) - G_j(x_tilde))  +  G(x_tilde)

    Costs 2A queries.  Unbiased for G(x) under uniform batches.
    """
    _require_batch(batch)
    acc = np.zeros_like(snap.g_tilde)
    for j in batch:
        fresh = query_inner_value(problem, j, x, ledger)
        anchor = query_inner_value(problem, j, snap.x_tilde, ledger)
        acc += fresh - anchor
    return acc / len(batch) + snap.g_tilde


def estimate_inner_jacobian(
    problem: CompositionProblem,
    x: np.ndarray,
    snap: EpochSnapshot,
    batch: Sequence[int],
    ledger: QueryLedger,
) -> np.ndarray:
    """Variance-reduced mean Jacobian at x from a size-B batch over 1..m.

    Costs 2B queries.  Unbiased for dG(x) under uniform batches.
    """
    _require_batch(batch)
    acc = np.zeros_like(snap.jac_tilde)
    for j in batch:
        fresh = query_inner_jacobian(problem, j, x, ledger)
        anchor = query_inner_jacobian(problem, j, snap.x_tilde, ledger)
        acc += fresh - anchor
    return acc / len(batch) + snap.jac_tilde


def grad_scvr1(
    problem: CompositionProblem,
    x: np.ndarray,
    snap: EpochSnapshot,
    g_hat: np.ndarray,
    i: int,
    j: int,
    ledger: QueryLedger,
) -> GradientEstimate:
    """Single-pair composite-gradient estimate using an estimated inner value.

        (dG_j(x))^T grad F_i(g_hat)
          - (dG_j(x_tilde))^T grad F_i(G(x_tilde))  +  grad_tilde

    Costs 4 queries (two Jacobians, two outer gradients).  Its mean over
    (i, j) with g_hat held fixed is (dG(x))^T grad F(g_hat), which is
    *not* the full gradient at x: the inner estimate makes it biased.
    """
    jac_x = query_inner_jacobian(problem, j, x, ledger)
    outer_x = query_outer_gradient(problem, i, g_hat, ledger)
    jac_t = query_inner_jacobian(problem, j, snap.x_tilde, ledger)
    outer_t = query_outer_gradient(problem, i, snap.g_tilde, ledger)
    direction = jac_x.T @ outer_x - jac_t.T @ outer_t + snap.grad_tilde
    return GradientEstimate(direction=direction, queries_charged=4)


def grad_scvr2(
    problem: CompositionProblem,
    snap: EpochSnapshot,
    g_hat: np.ndarray,
    jac_hat: np.ndarray,
    i: int,
    ledger: QueryLedger,
) -> GradientEstimate:
    """Composite-gradient estimate using estimated inner value and Jacobian.

        (jac_hat)^T grad F_i(g_hat)
          - (dG(x_tilde))^T grad F_i(G(x_tilde))  +  grad_tilde

    Costs 2 queries (two outer gradients); the Jacobian estimate was paid
    for when jac_hat was formed.  The correction is anchored at the exact
    snapshot Jacobian, matching the variant whose convergence recursion
    this package implements.
    """
    outer_x = query_outer_gradient(problem, i, g_hat, ledger)
    outer_t = query_outer_gradient(problem, i, snap.g_tilde, ledger)
    direction = jac_hat.T @ outer_x - snap.jac_tilde.T @ outer_t + snap.grad_tilde
    return GradientEstimate(direction=direction, queries_charged=2)


def grad_minibatch_v1(
    problem: CompositionProblem,
    snap: EpochSnapshot,
    g_hat: np.ndarray,
    jac_hat: np.ndarray,
    outer_batch: Sequence[int],
    ledger: QueryLedger,
) -> GradientEstimate:
    """Outer-mini-batched version of :func:`grad_scvr2`.

        (1/b) sum_{i in batch} [ (jac_hat)^T grad F_i(g_hat)
            - (dG(x_tilde))^T grad F_i(G(x_tilde)) ]  +  grad_tilde

    Costs 2b queries.  A singleton batch reproduces grad_scvr2 exactly.
    """
    _require_batch(outer_batch)
    acc = np.zeros_like(snap.grad_tilde)
    for i in outer_batch:
        outer_x = query_outer_gradient(problem, i, g_hat, ledger)
        outer_t = query_outer_gradient(problem, i, snap.g_tilde, ledger)
        acc += jac_hat.T @ outer_x - snap.jac_tilde.T @ outer_t
    direction = acc / len(outer_batch) + snap.grad_tilde
    return GradientEstimate(direction=direction, queries_charged=2 * len(outer_batch))


def grad_minibatch_v2(
    problem: CompositionProblem,
    x: np.ndarray,
    snap: EpochSnapshot,
    g_hat: np.ndarray,
    jac_batch: Sequence[int],
    outer_batch: Sequence[int],
    ledger: QueryLedger,
) -> GradientEstimate:
    """Mini-batch variant anchoring both terms at a batch-mean Jacobian.

    The same Jacobian batch is averaged at x and at the snapshot,

        J_x = (1/B) sum_{j in jac_batch} dG_j(x)        (B queries)
        J_t = (1/B) sum_{j in jac_batch} dG_j(x_tilde)  (B queries)

        (1/b) sum_{i in batch} [ J_x^T grad F_i(g_hat)
            - J_t^T grad F_i(G(x_tilde)) ]  +  grad_tilde    (2b queries)

    Costs 2B + 2b queries total.
    """
    _require_batch(jac_batch)
    _require_batch(outer_batch)
    jac_x = np.zeros_like(snap.jac_tilde)
    jac_t = np.zeros_like(snap.jac_tilde)
    for j in jac_batch:
        jac_x += query_inner_jacobian(problem, j, x, ledger)
        jac_t += query_inner_jacobian(problem, j, snap.x_tilde, ledger)
    jac_x /= len(jac_batch)
    jac_t /= len(jac_batch)
    acc = np.zeros_like(snap.grad_tilde)
    for i in outer_batch:
        outer_x = query_outer_gradient(problem, i, g_hat, ledger)
        outer_t = query_outer_gradient(problem, i, snap.g_tilde, ledger)
        acc += jac_x.T @ outer_x - jac_t.T @ outer_t
    direction = acc / len(outer_batch) + snap.grad_tilde
    return GradientEstimate(
        direction=direction,
        queries_charged=2 * len(jac_batch) + 2 * len(outer_batch),
    )
