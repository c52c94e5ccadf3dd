"""Zero-forcing distributed Tomlinson-Harashima precoding.

LQ-based filter construction, modulo arithmetic, per-user SE of the scalar
modulo channels via the wrapped-Gaussian entropy, high-SNR asymptotes with
the shaping loss, MSE-based decoding order and a symbol-level simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import xlogy

# per-user shaping loss of uniform (cubic) signaling: log2(pi*e/6)
SHAPING_LOSS_BITS = math.log2(math.pi * math.e / 6.0)

# smallest-to-largest singular value ratio below which a channel is rank deficient
_RANK_TOL = 1e-10

# below this per-dimension std the wrapped Gaussian equals the plain Gaussian
# to far beyond quadrature tolerance (tail mass < 1e-130 outside the cell)
_NARROW_SIGMA = 0.02
# above this per-dimension std the wrapped density is uniform to within
# 2*exp(-2*pi^2*sigma^2) < 6e-9, so the entropy is 0 far beyond tolerance
_WIDE_SIGMA = 1.0
_N_IMAGES = 20


class RankDeficientError(ValueError):
    """Channel rows are (numerically) linearly dependent."""


@dataclass
class ThpFilters:
    l_mat: np.ndarray  # (K, K) lower triangular, positive real diagonal
    q_mat: np.ndarray  # (K, N_B) orthonormal rows
    b_feedback: np.ndarray  # (K, K) unit lower triangular
    p_forward: np.ndarray  # (N_B, K)
    f_receive: np.ndarray  # (K, K) diagonal
    beta: float
    order: np.ndarray  # permutation of the allocated users
    diag_l: np.ndarray  # (K,) positive reals


@dataclass
class ModuloSymbols:
    """Symbol-level record of one simulated transmission (arrays are K x n)."""

    s: np.ndarray
    v: np.ndarray
    a_perturb: np.ndarray
    x: np.ndarray  # (N_B, n)
    y: np.ndarray
    n: np.ndarray
    d: np.ndarray
    d_hat: np.ndarray

    @property
    def mean_v_power(self) -> np.ndarray:
        return np.mean(np.abs(self.v) ** 2, axis=1)

    @property
    def mean_x_power(self) -> float:
        return float(np.mean(np.sum(np.abs(self.x) ** 2, axis=0)))

    @property
    def error(self) -> np.ndarray:
        """Per-user residual Mod(y - s)."""
        return modulo(self.y - self.s)


def modulo(z):
    """Componentwise modulo onto [-0.5, 0.5), real and imaginary parts."""
    z = np.asarray(z)
    if np.iscomplexobj(z):
        return modulo(z.real) + 1j * modulo(z.imag)
    return z - np.floor(z + 0.5)


def lq_decompose(h: np.ndarray):
    """LQ decomposition H = L Q with positive real diagonal of L.

    Q has orthonormal rows; raises RankDeficientError when the rows of H are
    numerically dependent.
    """
    h = np.asarray(h, dtype=complex)
    sv = np.linalg.svd(h, compute_uv=False)
    if sv[-1] <= _RANK_TOL * sv[0]:
        raise RankDeficientError("channel matrix is rank deficient")
    q_t, r = np.linalg.qr(h.conj().T)
    l_mat = r.conj().T
    q_mat = q_t.conj().T
    # rotate out the diagonal phases so L_kk > 0
    phases = np.exp(-1j * np.angle(np.diag(l_mat)))
    l_mat = l_mat * phases[None, :]
    q_mat = q_mat * phases[:, None].conj()
    return l_mat, q_mat


def build_filters(h: np.ndarray, order, tx_power: float) -> ThpFilters:
    """THP filters for the given decoding order and transmit power."""
    order = np.asarray(order)
    h_ord = np.asarray(h)[order]
    k = h_ord.shape[0]
    l_mat, q_mat = lq_decompose(h_ord)
    diag_l = np.real(np.diag(l_mat)).copy()
    beta = math.sqrt(6.0 * tx_power / k)
    b_feedback = l_mat / diag_l[:, None]
    p_forward = beta * q_mat.conj().T
    f_receive = np.diag(1.0 / (beta * diag_l))
    return ThpFilters(l_mat=l_mat, q_mat=q_mat, b_feedback=b_feedback,
                      p_forward=p_forward, f_receive=f_receive, beta=beta,
                      order=order, diag_l=diag_l)


def _wrapped_density(t: float, sigma: float) -> float:
    k = np.arange(-_N_IMAGES, _N_IMAGES + 1)
    return float(np.sum(np.exp(-0.5 * ((t + k) / sigma) ** 2))
                 / (math.sqrt(2.0 * math.pi) * sigma))


def wrapped_noise_entropy(var_complex: float) -> float:
    """Differential entropy (bits) of complex Gaussian noise wrapped to the unit square.

    Twice the entropy of a real N(0, var/2) wrapped to [-0.5, 0.5).  Always
    <= 0; tends to 0 (uniform) for large variance.
    """
    if not var_complex > 0:
        raise ValueError("variance must be positive")
    sigma2 = var_complex / 2.0
    sigma = math.sqrt(sigma2)
    if sigma < _NARROW_SIGMA:
        # wrapping is a no-op at this scale; use the Gaussian entropy directly
        h_real = 0.5 * math.log2(2.0 * math.pi * math.e * sigma2)
    elif sigma >= _WIDE_SIGMA:
        h_real = 0.0
    else:
        n_img = max(_N_IMAGES, int(10.0 * sigma) + 1)
        ks = np.arange(-n_img, n_img + 1)

        def integrand(t):
            g = np.sum(np.exp(-0.5 * ((t + ks) / sigma) ** 2)) \
                / (math.sqrt(2.0 * math.pi) * sigma)
            return -xlogy(g, g) / math.log(2.0)

        h_real, _ = quad(integrand, -0.5, 0.5, epsabs=1e-10, limit=300,
                         points=[0.0])
    return 2.0 * h_real


def per_user_se(l_kk: float, p_bar: float, mode: str = "exact") -> float:
    """SE (bits) of one scalar modulo channel with gain L_kk at power p_bar."""
    if not (l_kk > 0 and p_bar > 0):
        raise ValueError("l_kk and p_bar must be positive")
    snr = 6.0 * p_bar * l_kk ** 2
    if mode == "asymptote":
        return math.log2(snr / (math.pi * math.e))
    if mode == "exact":
        return -wrapped_noise_entropy(1.0 / snr)
    raise ValueError(f"unknown mode {mode!r}")


def sum_se_asymptote(h: np.ndarray, p_bar: float) -> float:
    """High-SNR THP sum SE: log2 det(p_bar H H^H) - K log2(pi e / 6)."""
    h = np.asarray(h, dtype=complex)
    k = h.shape[0]
    gram = h @ h.conj().T
    sv = np.linalg.svd(h, compute_uv=False)
    if sv[-1] <= _RANK_TOL * sv[0]:
        raise RankDeficientError("channel matrix is rank deficient")
    _, logdet = np.linalg.slogdet(gram)
    return k * math.log2(p_bar) + logdet / math.log(2.0) - k * SHAPING_LOSS_BITS


def thp_mse(diag_l, tx_power: float, k_alloc: int) -> float:
    """Analytic E||d_hat - d||^2 = (K / (6 P_Tx)) sum_k 1/L_kk^2."""
    diag_l = np.asarray(diag_l, dtype=float)
    if np.any(diag_l <= 0):
        raise ValueError("all diagonal entries must be positive")
    return k_alloc / (6.0 * tx_power) * float(np.sum(1.0 / diag_l ** 2))


def order_users(h: np.ndarray) -> np.ndarray:
    """MSE-based decoding order.

    Built from the last decoding position backwards: at each step the user
    whose channel component orthogonal to the span of the still-unplaced
    users' channels has maximal squared norm is placed.  That component is
    exactly the L_kk the user would receive at the position.
    """
    h = np.asarray(h, dtype=complex)
    k = h.shape[0]
    sv = np.linalg.svd(h, compute_uv=False)
    if sv[-1] <= _RANK_TOL * sv[0]:
        raise RankDeficientError("channel matrix is rank deficient")
    remaining = list(range(k))
    order = np.empty(k, dtype=int)
    for pos in range(k - 1, -1, -1):
        best, best_gain = None, -1.0
        for cand in remaining:
            others = [u for u in remaining if u != cand]
            row = h[cand]
            if others:
                basis = np.linalg.qr(h[others].T)[0]  # (N_B, m)
                row = row - basis @ (basis.conj().T @ row)
            gain = float(np.real(row.conj() @ row))
            if gain > best_gain:
                best, best_gain = cand, gain
        order[pos] = best
        remaining.remove(best)
    return order


def simulate_transmission(filters: ThpFilters, h: np.ndarray, n_symbols: int,
                          rng: np.random.Generator,
                          noise_power: float = 1.0) -> ModuloSymbols:
    """Run the successive modulo feedback loop over n_symbols channel uses.

    Data symbols have independent real/imaginary parts uniform on
    [-0.5, 0.5).  Receiver-side quantities use the effective channel
    h[order] with unit-variance AWGN scaled by sqrt(noise_power).
    """
    h_ord = np.asarray(h)[filters.order]
    k = h_ord.shape[0]
    l_mat = filters.l_mat
    diag_l = filters.diag_l

    s = rng.uniform(-0.5, 0.5, size=(k, n_symbols)) \
        + 1j * rng.uniform(-0.5, 0.5, size=(k, n_symbols))
    v = np.empty_like(s)
    for i in range(k):
        feedback = (l_mat[i, :i] @ v[:i]) / diag_l[i] if i else 0.0
        v[i] = modulo(s[i] - feedback)

    # equivalent linear form: v = s + (I - B) v + a with Gaussian-integer a
    a_perturb = filters.b_feedback @ v - s
    x = filters.p_forward @ v
    if noise_power > 0:
        noise = math.sqrt(noise_power / 2.0) * (
            rng.standard_normal((k, n_symbols))
            + 1j * rng.standard_normal((k, n_symbols)))
    else:
        noise = np.zeros((k, n_symbols), dtype=complex)
    y_pre = filters.f_receive @ (h_ord @ x + noise)
    y = modulo(y_pre)
    return ModuloSymbols(s=s, v=v, a_perturb=a_perturb, x=x, y=y, n=noise,
                         d=s, d_hat=y_pre - a_perturb)
