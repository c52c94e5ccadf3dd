"""Gram-matrix decomposition of the rank-one-link channel and DPC sum SE.

With theta_bar = [theta^H, 1]^H the Gram matrix of the effective channel
satisfies H H^H = C + D theta_bar theta_bar^H D^H, where
C = H_d (I - b b^H) H_d^H and D = [H_c, H_d b].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# eigenvalue below RANK_TOL * lambda_max counts as zero
RANK_TOL = 1e-9


class DegenerateRankError(RuntimeError):
    """More than one eigenvalue of C is numerically zero."""


@dataclass
class GramDecomposition:
    c_mat: np.ndarray  # (K, K) Hermitian PSD
    d_mat: np.ndarray  # (K, N_R + 1)
    user_index_map: list  # global user ids, row order of c_mat / d_mat

    @property
    def n_users(self) -> int:
        return self.c_mat.shape[0]

    @property
    def n_ris(self) -> int:
        return self.d_mat.shape[1] - 1


@dataclass
class EigenInfo:
    eigenvalues: np.ndarray  # nonincreasing
    eigenvectors: np.ndarray  # columns, orthonormal


def decompose(real, users) -> GramDecomposition:
    """Build C and D for the selected user subset."""
    users = list(users)
    if not users:
        raise ValueError("user subset must be nonempty")
    h_d = real.h_direct[users]
    h_c = real.h_cascaded[users]
    b = real.b_vec
    h_d_b = h_d @ b
    c_mat = h_d @ h_d.conj().T - np.outer(h_d_b, h_d_b.conj())
    c_mat = 0.5 * (c_mat + c_mat.conj().T)
    d_mat = np.concatenate([h_c, h_d_b[:, None]], axis=1)
    return GramDecomposition(c_mat=c_mat, d_mat=d_mat, user_index_map=users)


def effective_channel(real, users, theta: np.ndarray) -> np.ndarray:
    """H = H_d + H_c theta b^H for the selected rows."""
    theta = np.asarray(theta)
    if np.max(np.abs(np.abs(theta) - 1.0)) > 1e-9:
        raise ValueError("theta entries must be unit modulus")
    users = list(users)
    return real.h_direct[users] + np.outer(real.h_cascaded[users] @ theta,
                                           real.b_vec.conj())


def extend_theta(theta: np.ndarray) -> np.ndarray:
    """theta_bar = [theta^H, 1]^H, i.e. theta with a trailing 1."""
    return np.concatenate([np.asarray(theta, dtype=complex), [1.0]])


def gram_eigen(c_mat: np.ndarray) -> EigenInfo:
    """Eigen decomposition of C, eigenvalues in decreasing order."""
    vals, vecs = np.linalg.eigh(c_mat)
    return EigenInfo(eigenvalues=vals[::-1], eigenvectors=vecs[:, ::-1])


def _check_theta_bar(theta_bar):
    theta_bar = np.asarray(theta_bar, dtype=complex)
    if abs(theta_bar[-1] - 1.0) > 1e-9:
        raise ValueError("last entry of theta_bar must equal 1")
    return theta_bar


def dpc_sum_se(gram: GramDecomposition, theta_bar, p_bar: float) -> float:
    """DPC sum SE log2 det(I + p_bar H H^H), evaluated in decomposed form."""
    if not p_bar > 0:
        raise ValueError("p_bar must be positive")
    theta_bar = _check_theta_bar(theta_bar)
    c = gram.c_mat
    k = gram.n_users
    a_mat = np.eye(k) / p_bar + c
    d_theta = gram.d_mat @ theta_bar
    quad = np.real(d_theta.conj() @ scipy.linalg.solve(a_mat, d_theta, assume_a="pos"))
    _, logdet = np.linalg.slogdet(np.eye(k) + p_bar * c)
    return logdet / np.log(2.0) + np.log2(1.0 + quad)


def dpc_asymptote(gram: GramDecomposition, theta_bar, p_bar: float) -> float:
    """High-power DPC sum SE.

    Full-rank C: log2 det(p_bar C) + log2(theta_bar^H D^H C^-1 D theta_bar).
    Exactly one zero eigenvalue: sum_k<K log2(lambda_k p_bar)
    + log2(p_bar |u_K^H D theta_bar|^2).
    """
    if not p_bar > 0:
        raise ValueError("p_bar must be positive")
    theta_bar = _check_theta_bar(theta_bar)
    eig = gram_eigen(gram.c_mat)
    lam = np.clip(eig.eigenvalues, 0.0, None)
    tol = RANK_TOL * max(lam[0], 0.0)
    n_zero = int(np.sum(lam <= tol))
    d_theta = gram.d_mat @ theta_bar
    proj = eig.eigenvectors.conj().T @ d_theta  # coefficients u_k^H D theta_bar
    if n_zero == 0:
        quad = np.sum(np.abs(proj) ** 2 / lam)
        return np.sum(np.log2(lam * p_bar)) + np.log2(quad)
    if n_zero == 1:
        gain = np.abs(proj[-1]) ** 2
        return np.sum(np.log2(lam[:-1] * p_bar)) + np.log2(p_bar * gain)
    raise DegenerateRankError(
        f"{n_zero} eigenvalues of C below tolerance; asymptote undefined")
