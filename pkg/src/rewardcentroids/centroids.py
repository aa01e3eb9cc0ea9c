"""Closed-form reward centroids of the bounded feasible sets.

Centroids are reported after rescaling (alpha * r + beta with alpha > 0),
which leaves the induced policy ranking unchanged.  OPT centroids indicate
the expert's actions on visited states and flatten to 1/A elsewhere; the MCE
and BIRL centroids are log-policy tables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import BIRL, MCE, OPT, BehaviorModel
from .mdp import PolicyTable, RewardTable


@dataclass(frozen=True)
class CentroidRequest:
    """Expert policy plus the visited-state set a centroid is built from."""

    expert: PolicyTable
    support: frozenset[int]
    model: BehaviorModel
    num_actions: int

    def __post_init__(self):
        S, A = self.expert.probs.shape
        if A != self.num_actions:
            raise DomainError("num_actions does not match the expert table")
        support = frozenset(int(s) for s in self.support)
        for s in support:
            if not (0 <= s < S):
                raise DomainError("support state out of range")
        object.__setattr__(self, "support", support)
        if self.model.kind == OPT:
            rows = sorted(support)
            if rows and np.any((self.expert.probs[rows] == 1.0).sum(axis=1) != 1):
                raise DomainError("OPT centroid requires a deterministic expert on the support")
        else:
            if support != frozenset(range(S)):
                raise DomainError("MCE/BIRL centroids require full support")
            if np.any(self.expert.probs <= 0.0):
                raise DomainError("MCE/BIRL centroids require a strictly positive expert")

    @property
    def num_states(self) -> int:
        return self.expert.probs.shape[0]


def centroid_opt(req: CentroidRequest) -> RewardTable:
    """1 on the expert's visited actions, 0 on visited states otherwise, 1/A off support."""
    if req.model.kind != OPT:
        raise DomainError("centroid_opt requires an OPT request")
    S, A = req.num_states, req.num_actions
    values = np.full((S, A), 1.0 / A)
    actions = req.expert.actions()
    for s in req.support:
        values[s, :] = 0.0
        values[s, actions[s]] = 1.0
    return RewardTable(values)


def centroid_mce(req: CentroidRequest) -> RewardTable:
    """Elementwise natural log of the expert probabilities."""
    if req.model.kind != MCE:
        raise DomainError("centroid_mce requires an MCE request")
    return RewardTable(np.log(req.expert.probs))


def centroid_birl(req: CentroidRequest) -> RewardTable:
    """Row-wise max-normalized log table; each row's maximum entry is 0."""
    if req.model.kind != BIRL:
        raise DomainError("centroid_birl requires a BIRL request")
    probs = req.expert.probs
    return RewardTable(np.log(probs) - np.log(probs.max(axis=1, keepdims=True)))


def prior_centroid_opt(num_states: int, num_actions: int) -> RewardTable:
    """Rescaled centroid of the bounded OPT prior itself: the zero table."""
    if num_states < 1 or num_actions < 1:
        raise DomainError("dimensions must be positive")
    return RewardTable(np.zeros((num_states, num_actions)))


def enumerate_extensions(req: CentroidRequest) -> tuple[list[int], list[tuple[int, ...]]]:
    """Deterministic completions of the expert outside its support.

    Returns the off-support states in increasing order together with all
    action assignments for them, enumerated lexicographically.
    """
    off = sorted(set(range(req.num_states)) - req.support)
    return off, list(itertools.product(range(req.num_actions), repeat=len(off)))


def weighted_centroid_opt(req: CentroidRequest, q) -> RewardTable:
    """OPT centroid under a policy-weighted prior over expert extensions.

    q holds one nonnegative weight per deterministic extension of the expert
    (lexicographic order over off-support states).  On the support the result
    matches centroid_opt; off support, entry (s, a) is the q-mass of the
    extensions prescribing a at s, normalized by the total mass.  The uniform
    q therefore reproduces centroid_opt exactly.
    """
    if req.model.kind != OPT:
        raise DomainError("weighted_centroid_opt requires an OPT request")
    off, extensions = enumerate_extensions(req)
    q = np.asarray(q, dtype=float)
    if q.shape != (len(extensions),):
        raise DomainError(
            f"q must hold {len(extensions)} extension weights, got shape {q.shape}"
        )
    if np.any(q < 0) or q.sum() <= 0:
        raise DomainError("q must be nonnegative with positive sum")
    values = centroid_opt(req).values.copy()
    total = q.sum()
    for j, s in enumerate(off):
        mass = np.zeros(req.num_actions)
        for weight, ext in zip(q, extensions):
            mass[ext[j]] += weight
        values[s, :] = mass / total
    return RewardTable(values)


@dataclass(frozen=True)
class AffineFit:
    alpha: float
    beta: float
    residual_sup: float


def affine_fit(estimate: RewardTable, reference: RewardTable) -> AffineFit:
    """Least-squares (alpha, beta) minimizing ||estimate - alpha*reference - beta||^2.

    The sign of alpha is unconstrained; callers assert alpha > 0 where the
    rescaling convention demands it.  A constant reference makes the design
    degenerate and is rejected.
    """
    est = estimate.values.ravel()
    ref = reference.values.ravel()
    if est.shape != ref.shape:
        raise DomainError("estimate and reference must share a shape")
    if np.ptp(ref) == 0.0:
        raise DomainError("reference must be non-constant for an affine fit")
    design = np.stack([ref, np.ones_like(ref)], axis=1)
    coef, *_ = np.linalg.lstsq(design, est, rcond=None)
    residual = est - design @ coef
    return AffineFit(alpha=float(coef[0]), beta=float(coef[1]), residual_sup=float(np.abs(residual).max()))


def constant_fit(estimate: RewardTable) -> tuple[float, float]:
    """Best constant approximation (beta, residual_sup).

    This is the affine family available when the reference table is constant,
    e.g. when checking an estimate against the zero prior centroid.
    """
    est = estimate.values.ravel()
    beta = float(est.mean())
    return beta, float(np.abs(est - beta).max())
