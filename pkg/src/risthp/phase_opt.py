"""RIS phase-shift optimization.

Closed-form alignment when C has a zero eigenvalue, a principal-eigenvector
heuristic otherwise, plus element-wise coordinate ascent for refinement and
for the binary (+-1) phase alphabet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import gram as gram_mod
from .gram import GramDecomposition, extend_theta, gram_eigen

# direct row norms below this fraction of the median row norm count as blocked
BLOCKAGE_FRACTION = 1e-4
DEFAULT_MAX_SWEEPS = 50
SWEEP_REL_TOL = 1e-10


class NotApplicableError(RuntimeError):
    """The closed-form zero-eigenvalue solution does not apply."""


@dataclass
class PhaseConfig:
    theta: np.ndarray
    alphabet: str = "continuous"  # "continuous" or "binary"

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=complex)
        if self.alphabet == "continuous":
            if np.max(np.abs(np.abs(self.theta) - 1.0)) > 1e-12:
                raise ValueError("continuous phases must be unit modulus")
        elif self.alphabet == "binary":
            if not np.all(np.isin(self.theta, [-1.0 + 0j, 1.0 + 0j])):
                raise ValueError("binary phases must be exactly +-1")
        else:
            raise ValueError(f"unknown alphabet {self.alphabet!r}")


def random_phases(n_ris: int, rng: np.random.Generator) -> PhaseConfig:
    """I.i.d. uniform unit-modulus phases."""
    return PhaseConfig(np.exp(2j * np.pi * rng.uniform(size=n_ris)))


def zero_eig_direction(real, users) -> np.ndarray:
    """Eigenvector of C for the zero eigenvalue (unit norm).

    Returns the standard basis vector of a blocked user when one exists,
    otherwise H_d^{+,H} b normalized.  Raises NotApplicableError when the
    smallest eigenvalue of C is not numerically zero.
    """
    users = list(users)
    dec = gram_mod.decompose(real, users)
    eig = gram_eigen(dec.c_mat)
    lam = eig.eigenvalues
    if lam[-1] > gram_mod.RANK_TOL * max(lam[0], 0.0):
        raise NotApplicableError("smallest eigenvalue of C is not zero")

    h_d = real.h_direct[users]
    norms = np.linalg.norm(h_d, axis=1)
    thresh = BLOCKAGE_FRACTION * np.median(norms)
    blocked = np.flatnonzero(norms < thresh)
    k = len(users)
    if blocked.size:
        u = np.zeros(k, dtype=complex)
        u[blocked[np.argmin(norms[blocked])]] = 1.0
        return u
    u = np.linalg.pinv(h_d).conj().T @ real.b_vec
    nrm = np.linalg.norm(u)
    if nrm == 0.0:
        raise NotApplicableError("H_d^{+,H} b vanished")
    return u / nrm


def align_phases(u_k: np.ndarray, real, users) -> PhaseConfig:
    """Optimal continuous phases by alignment for the zero-eigenvalue case.

    theta = exp(j(angle(H_c^H u_K) - angle(b^H H_d^H u_K))), which makes all
    terms of u_K^H D theta_bar add up in phase.
    """
    users = list(users)
    h_c = real.h_cascaded[users]
    h_d = real.h_direct[users]
    ref = np.angle(real.b_vec.conj() @ (h_d.conj().T @ u_k))  # angle(0) -> 0
    theta = np.exp(1j * (np.angle(h_c.conj().T @ u_k) - ref))
    return PhaseConfig(theta)


def rayleigh_objective(gram: GramDecomposition, theta_bar, p_bar: float) -> float:
    """Quadratic form theta_bar^H D^H (I/p_bar + C)^-1 D theta_bar."""
    if not p_bar > 0:
        raise ValueError("p_bar must be positive")
    theta_bar = np.asarray(theta_bar, dtype=complex)
    a_mat = np.eye(gram.n_users) / p_bar + gram.c_mat
    d_theta = gram.d_mat @ theta_bar
    return float(np.real(d_theta.conj() @ scipy.linalg.solve(a_mat, d_theta,
                                                             assume_a="pos")))


def heuristic_phases(gram: GramDecomposition, p_bar: float) -> PhaseConfig:
    """Principal-eigenvector phase heuristic.

    Computes the principal eigenvector w' of the K x K matrix
    (I/p_bar + C)^-1 D D^H, lifts it to w_bar = D^H w' and takes the phases
    relative to the last entry, so the extended vector ends in 1.
    """
    if not p_bar > 0:
        raise ValueError("p_bar must be positive")
    k = gram.n_users
    a_mat = np.eye(k) / p_bar + gram.c_mat
    ddh = gram.d_mat @ gram.d_mat.conj().T
    ddh = 0.5 * (ddh + ddh.conj().T)
    vals, vecs = scipy.linalg.eigh(ddh, a_mat)
    w_prime = vecs[:, -1]
    w_bar = gram.d_mat.conj().T @ w_prime
    if np.linalg.norm(w_bar) == 0.0:
        raise RuntimeError("degenerate principal eigenvector")
    theta = np.exp(1j * (np.angle(w_bar[:-1]) - np.angle(w_bar[-1])))
    return PhaseConfig(theta)


def _quadratic_form_matrix(gram: GramDecomposition, p_bar: float,
                           direction: np.ndarray | None) -> np.ndarray:
    """Hermitian M with objective theta_bar^H M theta_bar.

    With a zero-eigenvalue direction u the objective is |u^H D theta_bar|^2,
    otherwise the Rayleigh quotient matrix D^H (I/p_bar + C)^-1 D.
    """
    d = gram.d_mat
    if direction is not None:
        c = d.conj().T @ direction
        return np.outer(c, c.conj())
    a_mat = np.eye(gram.n_users) / p_bar + gram.c_mat
    m = d.conj().T @ scipy.linalg.solve(a_mat, d, assume_a="pos")
    return 0.5 * (m + m.conj().T)


def refine_elementwise(gram: GramDecomposition, theta_init: PhaseConfig,
                       p_bar: float, max_sweeps: int = DEFAULT_MAX_SWEEPS,
                       direction: np.ndarray | None = None) -> PhaseConfig:
    """Coordinate ascent on the phase objective, one RIS element at a time.

    Continuous alphabet: each element is set to the closed-form unit-modulus
    maximizer of the objective as a function of that element alone.  Binary
    alphabet: each element is set to the better of {-1, +1}, ties keep the
    current value.  The objective is nondecreasing; stops after a full sweep
    without relative improvement or after max_sweeps.
    """
    if max_sweeps <= 0:
        raise ValueError("max_sweeps must be positive")
    m = _quadratic_form_matrix(gram, p_bar, direction)
    n_ris = gram.n_ris
    theta_bar = extend_theta(theta_init.theta)
    binary = theta_init.alphabet == "binary"

    obj = float(np.real(theta_bar.conj() @ m @ theta_bar))
    for _ in range(max_sweeps):
        changed = False
        for n in range(n_ris):
            # objective in theta_n: 2 Re(conj(theta_n) c_n) + const
            c_n = m[n] @ theta_bar - m[n, n] * theta_bar[n]
            if binary:
                new = 1.0 if np.real(c_n) > 0 else (-1.0 if np.real(c_n) < 0
                                                    else theta_bar[n])
            else:
                new = c_n / abs(c_n) if c_n != 0 else theta_bar[n]
            if new != theta_bar[n]:
                theta_bar[n] = new
                changed = True
        new_obj = float(np.real(theta_bar.conj() @ m @ theta_bar))
        if not changed or new_obj - obj <= SWEEP_REL_TOL * max(abs(obj), 1.0):
            obj = new_obj
            break
        obj = new_obj

    theta = theta_bar[:-1]
    if binary:
        theta = np.real(theta).round().astype(complex)
    else:
        theta = theta / np.abs(theta)
    return PhaseConfig(theta, alphabet=theta_init.alphabet)


def discretize_binary(theta: PhaseConfig) -> PhaseConfig:
    """Per-element closest +-1 pattern to a continuous phase vector."""
    signs = np.where(np.real(theta.theta) >= 0.0, 1.0, -1.0).astype(complex)
    return PhaseConfig(signs, alphabet="binary")
