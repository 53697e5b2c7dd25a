"""Finite-dimensional velocity-space operators.

Two interchangeable bases represent functions of the velocity variable:

* :class:`HermiteBasis` -- coefficients on the orthonormal family
  ``He_n(v)/sqrt(n!) * M(v)`` of the weighted space with weight ``1/M``,
  for the Gaussian equilibrium (collision operator diagonal, transport
  banded); tensorized for d = 2.
* :class:`GridBasis`    -- nodal values on a uniform velocity grid, for
  general radial equilibria and general scattering kernels (d = 1).

Assembly routines build the collision operator L, the transport multiplier
T(xi) = i (v . xi), the rank-one projection onto the equilibrium direction,
and the rank-one auxiliary operator used by the Lyapunov functionals.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite as hermgauss
from scipy.special import roots_hermitenorm as hermegauss

from .model import Equilibrium, ModelSpec, Moments, named_kernel

__all__ = [
    "BasisError",
    "HermiteBasis",
    "GridBasis",
    "OperatorMatrix",
    "assemble_collision",
    "assemble_transport",
    "assemble_projection",
    "assemble_auxiliary",
    "estimate_coercivity",
    "dump_matrix",
]


class BasisError(ValueError):
    """Basis/case mismatch or inconsistent dimensions."""


def hermite_functions(x: np.ndarray, n: int) -> np.ndarray:
    """Matrix H[p, m] = He_m(x_p)/sqrt(m!) (normalized probabilists' family)."""
    x = np.asarray(x, dtype=float)
    H = np.zeros(x.shape + (n,))
    H[..., 0] = 1.0
    if n > 1:
        H[..., 1] = x
    for m in range(1, n - 1):
        H[..., m + 1] = (x * H[..., m] - math.sqrt(m) * H[..., m - 1]) / math.sqrt(m + 1)
    return H


def ladder_matrix(n: int) -> np.ndarray:
    """Multiplication by v on the normalized Hermite coefficients (d = 1)."""
    V = np.zeros((n, n))
    for m in range(n - 1):
        V[m + 1, m] = math.sqrt(m + 1)
        V[m, m + 1] = math.sqrt(m + 1)
    return V


class HermiteBasis:
    """Hermite spectral basis for the Gaussian equilibrium, d in {1, 2}."""

    kind = "hermite"

    def __init__(self, n: int, d: int = 1):
        if n < 8:
            raise BasisError("Hermite basis needs at least 8 modes per dimension")
        if d not in (1, 2):
            raise BasisError("Hermite basis supports d in {1, 2}")
        self.n = n
        self.d = d
        self.size = n**d
        if d == 1:
            self.multi_indices = np.arange(n)[:, None]
        else:
            ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
            self.multi_indices = np.stack([ii.ravel(), jj.ravel()], axis=-1)
        self.degrees = self.multi_indices.sum(axis=1)
        self._gram_cache: dict[float, np.ndarray] = {}

    # -- inner-product structure ------------------------------------------
    def gram(self) -> np.ndarray:
        return np.eye(self.size)

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        return complex(np.vdot(g, f))

    def norm(self, f: np.ndarray) -> float:
        return float(np.linalg.norm(f))

    def gamma_gram(self, k: float) -> np.ndarray:
        """Gram matrix of the (1+|v|^2)^(k/2) weight on the basis."""
        if math.isinf(k):
            return np.eye(self.size)
        key = float(k)
        if key in self._gram_cache:
            return self._gram_cache[key]
        npts = 2 * self.n + 2 * (int(math.ceil(k)) + 4)
        x, w = hermgauss(npts)  # weight exp(-v^2)
        H = hermite_functions(x, self.n)
        if self.d == 1:
            gamma = (1.0 + x**2) ** (k / 2.0)
            B = H
            wq = w * gamma / (2.0 * math.pi)
            Q = B.T @ (wq[:, None] * B)
        else:
            X1, X2 = np.meshgrid(x, x, indexing="ij")
            gamma = (1.0 + X1**2 + X2**2) ** (k / 2.0)
            wq = (np.outer(w, w) * gamma / (2.0 * math.pi) ** 2).ravel()
            B = np.einsum("pa,qb->pqab", H, H).reshape(npts * npts, self.size)
            Q = B.T @ (wq[:, None] * B)
        Q = 0.5 * (Q + Q.T)
        self._gram_cache[key] = Q
        return Q

    def norm_gamma(self, f: np.ndarray, k: float) -> float:
        if math.isinf(k):
            return self.norm(f)
        Q = self.gamma_gram(k)
        val = np.real(np.vdot(f, Q @ f))
        return float(math.sqrt(max(val, 0.0)))

    # -- physical functionals ---------------------------------------------
    def rho(self, f: np.ndarray) -> complex:
        return complex(f[0])

    def current(self, f: np.ndarray) -> np.ndarray:
        if self.d == 1:
            return np.array([f[1]], dtype=complex)
        return np.array([f[self.n], f[1]], dtype=complex)

    def equilibrium_coeffs(self) -> np.ndarray:
        e0 = np.zeros(self.size, dtype=complex)
        e0[0] = 1.0
        return e0

    def ladder(self, axis: int = 0) -> np.ndarray:
        V = ladder_matrix(self.n)
        if self.d == 1:
            return V
        eye = np.eye(self.n)
        return np.kron(V, eye) if axis == 0 else np.kron(eye, V)

    def moment_vector(self, beta: int, axis: int = 0) -> np.ndarray:
        """Row vector m with   integral v_axis^beta f dv = m @ coeffs."""
        x, w = hermegauss(self.n + beta + 6)  # weight exp(-v^2/2), exact here
        H = hermite_functions(x, self.n)
        z = math.sqrt(2.0 * math.pi)
        m1 = (w / z) @ (H * x[:, None] ** beta)
        if self.d == 1:
            return m1
        m0 = (w / z) @ H
        return np.kron(m1, m0) if axis == 0 else np.kron(m0, m1)

    def eval(self, coeffs: np.ndarray, v: np.ndarray, equilibrium: Equilibrium) -> np.ndarray:
        """Evaluate sum_n c_n He_n(v)/sqrt(n!) M(v) at points v (d = 1)."""
        if self.d != 1:
            raise BasisError("pointwise evaluation implemented for d = 1")
        H = hermite_functions(np.asarray(v, dtype=float), self.n)
        return (H @ coeffs) * equilibrium(v)


class GridBasis:
    """Uniform nodal velocity grid on [-vmax, vmax], midpoint weights (d = 1)."""

    kind = "grid"

    def __init__(self, vmax: float, n: int, equilibrium: Equilibrium):
        if n < 16:
            raise BasisError("grid basis needs at least 16 nodes")
        self.d = 1
        self.n = n
        self.size = n
        self.vmax = float(vmax)
        self.h = 2.0 * vmax / n
        self.nodes = -vmax + (np.arange(n) + 0.5) * self.h
        self.weights = np.full(n, self.h)
        self.equilibrium = equilibrium
        self.M = equilibrium(self.nodes)
        self.mass_h = float(np.sum(self.weights * self.M))
        if abs(self.mass_h - 1.0) > 1e-8:
            raise BasisError(
                f"grid quadrature integrates M to {self.mass_h!r}; enlarge vmax or n"
            )

    def gram(self) -> np.ndarray:
        return np.diag(self.weights / self.M)

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        return complex(np.sum(self.weights * f * np.conj(g) / self.M))

    def norm(self, f: np.ndarray) -> float:
        return float(math.sqrt(max(np.sum(self.weights * np.abs(f) ** 2 / self.M).real, 0.0)))

    def norm_gamma(self, f: np.ndarray, k: float) -> float:
        if math.isinf(k):
            return self.norm(f)
        gamma = (1.0 + self.nodes**2) ** (k / 2.0)
        return float(math.sqrt(np.sum(self.weights * np.abs(f) ** 2 * gamma)))

    def rho(self, f: np.ndarray) -> complex:
        return complex(np.sum(self.weights * f))

    def current(self, f: np.ndarray) -> np.ndarray:
        return np.array([np.sum(self.weights * self.nodes * f)], dtype=complex)

    def equilibrium_coeffs(self) -> np.ndarray:
        return self.M.astype(complex)

    def moment_vector(self, beta: int, axis: int = 0) -> np.ndarray:
        return self.weights * self.nodes**beta


@dataclass
class OperatorMatrix:
    """Dense operator on a velocity basis with a structural tag."""

    mat: np.ndarray
    tag: str
    xi: np.ndarray | None = None

    @property
    def shape(self):
        return self.mat.shape

    def __matmul__(self, other: np.ndarray) -> np.ndarray:
        return self.mat @ other


def _as_xi(xi, d: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if arr.shape != (d,):
        raise BasisError(f"frequency must have {d} component(s), got shape {arr.shape}")
    return arr


def assemble_collision(spec: ModelSpec, basis) -> OperatorMatrix:
    """Collision operator L on the given basis.

    Hermite: Fokker-Planck is diagonal with entries -|n|; the relaxation
    (sigma = 1) scattering operator is diagonal with entries 0, -1, ...
    General scattering kernels require the grid basis, where the loss rate
    is discretized with the transposed-kernel quadrature so that the
    discrete mass of L f vanishes identically.
    """
    if basis.kind == "hermite":
        if not spec.is_gaussian:
            raise BasisError("Hermite basis requires the Gaussian equilibrium")
        if spec.case == "fokker-planck":
            return OperatorMatrix(np.diag(-basis.degrees.astype(float)), "collision")
        if spec.kernel != "one":
            raise BasisError("Hermite basis supports only sigma = 1 scattering")
        diag = -np.ones(basis.size)
        diag[0] = 0.0
        return OperatorMatrix(np.diag(diag), "collision")

    if spec.d != 1:
        raise BasisError("grid collision operators are implemented for d = 1")
    v, h, M = basis.nodes, basis.h, basis.M
    n = basis.n
    if spec.case == "fokker-planck":
        mid = basis.equilibrium(0.5 * (v[:-1] + v[1:]))
        S = np.zeros((n, n))
        for j in range(n - 1):
            c = mid[j] / h**2
            S[j, j] -= c
            S[j + 1, j + 1] -= c
            S[j, j + 1] += c
            S[j + 1, j] += c
        L = S * (1.0 / M)[None, :]
        return OperatorMatrix(L, "collision")

    sigma, _ = named_kernel(spec.kernel)
    vv, ww = np.meshgrid(v, v, indexing="ij")
    sig = sigma(vv, ww)
    gain = M[:, None] * sig * h
    loss = np.diag((sig * M[:, None] * h).sum(axis=0))
    return OperatorMatrix(gain - loss, "collision")


def assemble_transport(xi, basis) -> OperatorMatrix:
    """Multiplication by i (v . xi); banded on Hermite, diagonal on grid."""
    xi = _as_xi(xi, basis.d)
    if basis.kind == "hermite":
        T = np.zeros((basis.size, basis.size), dtype=complex)
        for axis in range(basis.d):
            if xi[axis] != 0.0:
                T += 1j * xi[axis] * basis.ladder(axis)
        return OperatorMatrix(T, "transport", xi=xi)
    T = np.diag(1j * basis.nodes * xi[0])
    return OperatorMatrix(T, "transport", xi=xi)


def assemble_projection(basis) -> OperatorMatrix:
    """Orthogonal projection onto span{M} in the weighted inner product."""
    if basis.kind == "hermite":
        P = np.zeros((basis.size, basis.size))
        P[0, 0] = 1.0
        return OperatorMatrix(P, "projection")
    P = np.outer(basis.M, basis.weights) / basis.mass_h
    return OperatorMatrix(P, "projection")


def assemble_auxiliary(xi, moments: Moments, basis) -> OperatorMatrix:
    """Rank-one auxiliary operator A F = -i (xi . j_F) / (1 + Theta|xi|^2) M."""
    xi = _as_xi(xi, basis.d)
    denom = 1.0 + moments.Theta * float(xi @ xi)
    e0 = basis.equilibrium_coeffs()
    rows = [basis.moment_vector(1, axis) for axis in range(basis.d)]
    row = sum(x * r for x, r in zip(xi, rows))
    A = np.outer(e0, (-1j / denom) * row)
    return OperatorMatrix(A, "auxiliary", xi=xi)


def estimate_coercivity(L: OperatorMatrix, basis, samples: int = 200,
                        rng: np.random.Generator | None = None) -> float:
    """Lower bound on the spectral gap of -L relative to its null direction.

    Uses the smallest nonzero eigenvalue when L is self-adjoint in the
    weighted inner product (checked numerically), combined with the minimum
    Rayleigh quotient over random complex samples.  A non-positive estimate
    signals a broken discretization.
    """
    rng = rng or np.random.default_rng(0)
    W = basis.gram()
    P = assemble_projection(basis).mat
    Lm = L.mat

    best = np.inf
    for _ in range(samples):
        f = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
        g = f - P @ f
        denom = np.real(np.vdot(g, W @ g))
        if denom < 1e-12:
            continue
        num = -np.real(np.vdot(g, W @ (Lm @ g)))
        best = min(best, num / denom)

    WL = W @ Lm
    if np.linalg.norm(WL - WL.conj().T) <= 1e-10 * max(np.linalg.norm(WL), 1.0):
        sqw = np.sqrt(np.diag(W)) if np.allclose(W, np.diag(np.diag(W))) else None
        if sqw is not None:
            sym = -(sqw[:, None] * Lm) / sqw[None, :]
            ev = np.linalg.eigvalsh(0.5 * (sym + sym.T))
            nonzero = ev[ev > 1e-10 * max(abs(ev[-1]), 1.0)]
            if nonzero.size:
                best = min(best, float(nonzero[0]))

    if not np.isfinite(best) or best <= 0:
        raise BasisError(f"coercivity estimate non-positive ({best}); discretization broken")
    return float(best)


def dump_matrix(op: OperatorMatrix, path) -> None:
    """Write the dense matrix as CSV rows (row, col, re, im) for debugging."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "re", "im"])
        m = np.asarray(op.mat)
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                z = complex(m[i, j])
                if z != 0:
                    writer.writerow([i, j, f"{z.real:.17g}", f"{z.imag:.17g}"])
