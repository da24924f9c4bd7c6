"""Reference implementations used only by the tests.

Each one follows a different computational route than the package code:
explicit scalar loops instead of Khatri-Rao products, normal equations
instead of an SVD.
"""

import numpy as np


def random_complex(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_factors(rng, m, k, n, p):
    return random_complex(rng, (n, m)), random_complex(rng, (k, n)), random_complex(rng, (p, n))


def tensor_loop(h1, h2, phi):
    """Z[k, m, p] = sum_n H2[k, n] H1[n, m] Phi[p, n] by explicit loops."""
    n_ris, m_ant = h1.shape
    k_usr = h2.shape[0]
    p_cfg = phi.shape[0]
    z = np.zeros((k_usr, m_ant, p_cfg), dtype=complex)
    for k in range(k_usr):
        for m in range(m_ant):
            for p in range(p_cfg):
                acc = 0j
                for n in range(n_ris):
                    acc += h2[k, n] * h1[n, m] * phi[p, n]
                z[k, m, p] = acc
    return z


def mode1_loop(h1, h2, phi):
    z = tensor_loop(h1, h2, phi)
    k_usr, m_ant, p_cfg = z.shape
    out = np.zeros((p_cfg * m_ant, k_usr), dtype=complex)
    for k in range(k_usr):
        for m in range(m_ant):
            for p in range(p_cfg):
                out[m * p_cfg + p, k] = z[k, m, p]
    return out


def mode2_loop(h1, h2, phi):
    z = tensor_loop(h1, h2, phi)
    k_usr, m_ant, p_cfg = z.shape
    out = np.zeros((k_usr * p_cfg, m_ant), dtype=complex)
    for k in range(k_usr):
        for m in range(m_ant):
            for p in range(p_cfg):
                out[p * k_usr + k, m] = z[k, m, p]
    return out


def mode3_loop(h1, h2, phi):
    z = tensor_loop(h1, h2, phi)
    k_usr, m_ant, p_cfg = z.shape
    out = np.zeros((m_ant * k_usr, p_cfg), dtype=complex)
    for k in range(k_usr):
        for m in range(m_ant):
            for p in range(p_cfg):
                out[k * m_ant + m, p] = z[k, m, p]
    return out


def pinv_normal_equations(a):
    """(A^H A)^-1 A^H for full-column-rank A."""
    return np.linalg.solve(a.conj().T @ a, a.conj().T)


def max_principal_angle(rows_a, rows_b):
    """Largest principal angle between the row spaces of two matrices."""
    qa, _ = np.linalg.qr(rows_a.conj().T)
    qb, _ = np.linalg.qr(rows_b.conj().T)
    s = np.linalg.svd(qa.conj().T @ qb, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))


def rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))
