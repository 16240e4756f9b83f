"""Lie algebra and group core.

Algebra elements are real coefficient arrays of shape (..., dim) in a fixed
orthonormal basis e_a; group elements are complex matrices in the fundamental
representation. The inner product is <X, Y> = -2 tr(XY), which makes the
standard su(n) bases below orthonormal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg


class NotSimpleError(ValueError):
    """ad_Cas is not a multiple of the identity; carries the full matrix."""

    def __init__(self, message, ad_cas):
        super().__init__(message)
        self.ad_cas = ad_cas


class BranchError(ValueError):
    """Matrix logarithm requested at a point with an eigenvalue near -1."""


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    name: str
    dim: int
    structure_constants: np.ndarray  # f[a, b, c]: [e_a, e_b] = sum_c f[a,b,c] e_c
    rep_matrices: np.ndarray  # (dim, n, n) anti-Hermitian
    simple: bool = True
    _ad: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        # ad[a][c, b] = f[a, b, c], i.e. ad_{e_a} as a matrix acting on coefficient vectors
        object.__setattr__(self, "_ad", np.transpose(self.structure_constants, (0, 2, 1)).copy())

    @property
    def rep_dim(self):
        return self.rep_matrices.shape[1]

    @property
    def ad_matrices(self):
        return self._ad

    def check(self, x, name="X"):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"{name} has last axis {x.shape[-1]}, algebra {self.name} has dim {self.dim}")
        return x

    def bracket(self, x, y):
        x = self.check(x)
        y = self.check(y, "Y")
        x, y = np.broadcast_arrays(x, y)
        d = self.dim
        T = (x.reshape(-1, d) @ self.structure_constants.reshape(d, d * d)).reshape(-1, d, d)
        return (y.reshape(-1, 1, d) @ T).reshape(x.shape)

    def ad(self, x):
        """Matrix of ad_x acting on coefficient vectors."""
        x = self.check(x)
        return np.einsum("...a,acb->...cb", x, self._ad)

    def inner(self, x, y):
        return np.sum(np.asarray(x) * np.asarray(y), axis=-1)

    def to_matrix(self, x):
        x = self.check(x)
        n = self.rep_dim
        return (x.reshape(-1, self.dim) @ self.rep_matrices.reshape(self.dim, n * n)).reshape(x.shape[:-1] + (n, n))

    def from_matrix(self, m):
        # <M, e_a> = -2 tr(M e_a)
        m = np.asarray(m)
        n = self.rep_dim
        basis_t = np.swapaxes(self.rep_matrices, -1, -2).reshape(self.dim, n * n)
        return -2.0 * np.real(m.reshape(-1, n * n) @ basis_t.T).reshape(m.shape[:-2] + (self.dim,))

    def identity(self, shape=()):
        n = self.rep_dim
        return np.broadcast_to(np.eye(n, dtype=complex), tuple(shape) + (n, n)).copy()


def _pauli():
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    return [s1, s2, s3]


def _gell_mann():
    m = np.zeros((8, 3, 3), dtype=complex)
    m[0][0, 1] = m[0][1, 0] = 1
    m[1][0, 1], m[1][1, 0] = -1j, 1j
    m[2][0, 0], m[2][1, 1] = 1, -1
    m[3][0, 2] = m[3][2, 0] = 1
    m[4][0, 2], m[4][2, 0] = -1j, 1j
    m[5][1, 2] = m[5][2, 1] = 1
    m[6][1, 2], m[6][2, 1] = -1j, 1j
    m[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return list(m)


def _from_reps(name, reps, simple=True):
    reps = np.array(reps, dtype=complex)
    dim = reps.shape[0]
    comm = np.einsum("aij,bjk->abik", reps, reps) - np.einsum("bij,ajk->abik", reps, reps)
    f = -2.0 * np.real(np.einsum("abij,cji->abc", comm, reps))
    f[np.abs(f) < 1e-15] = 0.0
    return LieAlgebra(name, dim, f, reps, simple)


@lru_cache(maxsize=None)
def get_algebra(name="su2"):
    """Algebra by config name: 'su2', 'su3' or 'abelian-test'."""
    if name == "su2":
        return _from_reps("su2", [-0.5j * s for s in _pauli()])
    if name == "su3":
        return _from_reps("su3", [-0.5j * s for s in _gell_mann()])
    if name == "abelian-test":
        # u(1) with e = i/sqrt(2), so that -2 tr(e e) = 1
        return _from_reps("abelian-test", [np.array([[1j / np.sqrt(2)]])], simple=False)
    raise ValueError(f"unknown algebra {name!r}; expected su2, su3 or abelian-test")


def bracket(x, y, alg=None):
    alg = alg or get_algebra()
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError("dimension mismatch in bracket")
    return alg.bracket(x, y)


def ad_casimir(alg):
    """sum_a ad_{e_a}^2 as a dim x dim matrix (brute force over the basis)."""
    return sum(a @ a for a in alg.ad_matrices)


def casimir_lambda(alg):
    """Return (lambda, residual) with ad_Cas = lambda id.

    Raises NotSimpleError (carrying ad_Cas) when the algebra is declared
    non-simple or ad_Cas is not scalar.
    """
    m = ad_casimir(alg)
    lam = float(np.trace(m) / alg.dim)
    resid = float(np.max(np.abs(m - lam * np.eye(alg.dim))))
    if not alg.simple or resid > 1e-10:
        raise NotSimpleError(f"{alg.name}: ad_Cas is not a nonzero scalar on a simple algebra", m)
    return lam, resid


def casimir_centrality(alg):
    """max over basis h of |[ad_h, ad_Cas]| (max-norm)."""
    m = ad_casimir(alg)
    return float(max(np.max(np.abs(a @ m - m @ a)) for a in alg.ad_matrices))


def jacobi_residual(alg, x, y, z):
    b = alg.bracket
    return np.linalg.norm(b(x, b(y, z)) + b(y, b(z, x)) + b(z, b(x, y)), axis=-1)


def exp_map(x, alg=None):
    """Group exponential on representation matrices (Pade scaling-and-squaring)."""
    alg = alg or get_algebra()
    return scipy.linalg.expm(alg.to_matrix(x))


def Ad(g, x, alg=None):
    alg = alg or get_algebra()
    m = alg.to_matrix(x)
    return alg.from_matrix(g @ m @ np.conj(np.swapaxes(g, -1, -2)))


def Ad_matrix(g, alg=None):
    """Ad_g as a dim x dim real orthogonal matrix acting on coefficients."""
    alg = alg or get_algebra()
    gm = np.asarray(g)[..., None, :, :]
    rm = gm @ alg.rep_matrices @ np.conj(np.swapaxes(gm, -1, -2))
    # column b is Ad_g e_b
    return np.swapaxes(alg.from_matrix(rm), -1, -2)


def log_map(g, alg=None, tol=1e-6):
    """Principal logarithm of unitary matrices, returned as algebra coefficients."""
    alg = alg or get_algebra()
    g = np.asarray(g, dtype=complex)
    w, v = np.linalg.eig(g)
    if np.any(np.abs(w + 1.0) < tol):
        raise BranchError("eigenvalue at -1: logarithm is not well defined, refine the grid")
    ang = np.angle(w)
    m = v @ (1j * ang[..., :, None] * np.linalg.inv(v))
    return alg.from_matrix(m)


def random_algebra(rng, alg, shape=(), scale=1.0):
    return scale * rng.standard_normal(tuple(shape) + (alg.dim,))


def random_group(rng, alg, shape=(), scale=1.0):
    return exp_map(random_algebra(rng, alg, shape, scale), alg)


def noise_rng(seed, stream=0):
    """Independent generator keyed by (seed, stream id)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream)]))


def sample_white_noise(N, dt, seed, alg=None, stream=0):
    """Space-time white noise on an N x N grid for one time step.

    Returns an array of shape (2, N, N, dim) with i.i.d. N(0, 1/(a^2 dt)) entries, a = 1/N.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if N < 2:
        raise ValueError("N must be at least 2")
    alg = alg or get_algebra()
    a = 1.0 / N
    rng = noise_rng(seed, stream)
    return rng.standard_normal((2, N, N, alg.dim)) / (a * np.sqrt(dt))
