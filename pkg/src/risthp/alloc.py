"""Greedy user allocation for ZF-dTHP.

Maximizes the high-SNR sum-SE lower bound sum_k max(0, SE_k) with phase and
decoding-order re-optimization per candidate allocation, plus the two-norm
relaxation as a fast ranking metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import gram as gram_mod
from . import phase_opt, thp
from .phase_opt import NotApplicableError, PhaseConfig


@dataclass
class Allocation:
    users: list
    theta: PhaseConfig
    order: np.ndarray
    se_bound: float  # sum_k max(0, asymptotic SE_k), bits
    se_exact: float  # sum of exact modulo-channel SEs, bits
    diag_l: np.ndarray = field(default=None)

    @property
    def feasible(self) -> bool:
        return np.isfinite(self.se_bound)


def _infeasible(users, theta):
    return Allocation(users=list(users), theta=theta, order=np.array([], dtype=int),
                      se_bound=-np.inf, se_exact=0.0, diag_l=np.array([]))


def optimize_phases(real, users, p_bar: float, phase_mode: str,
                    rng: np.random.Generator | None = None) -> PhaseConfig:
    """Phase configuration for a user subset under the requested mode.

    continuous: zero-eigenvalue alignment when applicable, otherwise the
    eigenvector heuristic, followed by element-wise refinement.  binary: the
    continuous result discretized, then element-wise +-1 sweeps.  random:
    i.i.d. unit-modulus phases from rng.
    """
    if phase_mode == "random":
        if rng is None:
            raise ValueError("random phase mode needs an rng")
        return phase_opt.random_phases(real.n_ris, rng)
    if phase_mode not in ("continuous", "binary"):
        raise ValueError(f"unknown phase mode {phase_mode!r}")

    dec = gram_mod.decompose(real, users)
    try:
        u_k = phase_opt.zero_eig_direction(real, users)
        theta = phase_opt.align_phases(u_k, real, users)
        theta = phase_opt.refine_elementwise(dec, theta, p_bar, direction=u_k)
        direction = u_k
    except NotApplicableError:
        theta = phase_opt.heuristic_phases(dec, p_bar)
        theta = phase_opt.refine_elementwise(dec, theta, p_bar)
        direction = None
    if phase_mode == "binary":
        theta = phase_opt.discretize_binary(theta)
        theta = phase_opt.refine_elementwise(dec, theta, p_bar, direction=direction)
    return theta


def evaluate_allocation(real, users, p_bar: float, phase_mode: str,
                        rng: np.random.Generator | None = None,
                        fixed_theta: PhaseConfig | None = None) -> Allocation:
    """Phase + order optimization and SE evaluation for one user subset.

    ``fixed_theta`` bypasses the per-subset phase optimization (used for
    random phases that are a property of the RIS, not of the allocation).
    """
    users = list(users)
    if not users:
        raise ValueError("user subset must be nonempty")
    if len(users) > real.n_bs:
        raise ValueError("cannot allocate more users than BS antennas")

    theta = fixed_theta if fixed_theta is not None else optimize_phases(
        real, users, p_bar, phase_mode, rng)
    h_eff = gram_mod.effective_channel(real, users, theta.theta)
    try:
        order = thp.order_users(h_eff)
        l_mat, _ = thp.lq_decompose(h_eff[order])
    except thp.RankDeficientError:
        return _infeasible(users, theta)
    diag_l = np.real(np.diag(l_mat))
    se_bound = float(sum(max(0.0, thp.per_user_se(l, p_bar, "asymptote"))
                         for l in diag_l))
    se_exact = float(sum(thp.per_user_se(l, p_bar, "exact") for l in diag_l))
    return Allocation(users=users, theta=theta, order=order,
                      se_bound=se_bound, se_exact=se_exact, diag_l=diag_l)


def greedy_allocate(real, p_bar: float, phase_mode: str,
                    rng: np.random.Generator | None = None,
                    first_user: str = "best") -> Allocation:
    """Greedy allocation: add users one by one while the SE bound increases.

    ``first_user`` selects the seed: "best" starts from the single user with
    the largest bound, "index" from user 0.
    """
    k = real.n_users
    max_users = min(k, real.n_bs)
    fixed_theta = None
    if phase_mode == "random":
        fixed_theta = phase_opt.random_phases(real.n_ris, rng)

    def evaluate(users):
        return evaluate_allocation(real, users, p_bar, phase_mode, rng,
                                   fixed_theta=fixed_theta)

    if first_user == "index":
        best = evaluate([0])
    elif first_user == "best":
        best = max((evaluate([u]) for u in range(k)),
                   key=lambda a: a.se_bound)
    else:
        raise ValueError(f"unknown first_user policy {first_user!r}")

    while len(best.users) < max_users:
        candidates = [u for u in range(k) if u not in best.users]
        step = max((evaluate(best.users + [u]) for u in candidates),
                   key=lambda a: a.se_bound)
        if step.se_bound <= best.se_bound:
            break
        best = step
    return best


def relaxation_metric(gram_subset, n_ris: int) -> float:
    """Two-norm relaxation N_R * lambda_max(C^-1 D D^H) of the phase objective.

    Evaluated through the K x K product, never in the (N_R+1)-dimensional
    space.  Requires invertible C.
    """
    c = gram_subset.c_mat
    lam = np.linalg.eigvalsh(c)
    if lam[0] <= gram_mod.RANK_TOL * max(lam[-1], 0.0):
        raise NotApplicableError("C is singular on this subset")
    ddh = gram_subset.d_mat @ gram_subset.d_mat.conj().T
    ddh = 0.5 * (ddh + ddh.conj().T)
    vals = scipy.linalg.eigh(ddh, c, eigvals_only=True)
    return float(n_ris * vals[-1])
