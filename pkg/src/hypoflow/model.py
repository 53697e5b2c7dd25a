"""Collision models: local equilibria, scattering kernels, weights and moment constants.

A model is a collision operator acting in the velocity variable only.  Two
families are supported:

* ``fokker-planck`` -- drift/diffusion relaxation towards a radial equilibrium
  profile ``M``;
* ``scattering``    -- integral (BGK-type) relaxation with a bounded scattering
  rate ``sigma(v, v')``.

The equilibrium must be radial, positive, mass one and exponentially
dominated.  From it we compute the directional moments ``Theta`` (second),
``K`` (fourth), the gradient moment ``theta`` and the coupling constant
``kappa`` that feed the decay-rate certificates, together with the
microscopic coercivity constant ``lambda_m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.special import roots_hermitenorm

__all__ = [
    "ModelError",
    "ModelSpec",
    "Equilibrium",
    "Weight",
    "Moments",
    "HypothesisReport",
    "build_equilibrium",
    "compute_moments",
    "check_hypotheses",
    "gauss_hermite",
    "named_kernel",
    "EQUILIBRIUM_PROFILES",
    "KERNELS",
]

CASES = ("fokker-planck", "scattering")

# Named radial profiles: r >= 0 -> unnormalized value, with domination
# constants (c1 is for the *normalized* profile) and a continuity flag.
EQUILIBRIUM_PROFILES: dict[str, dict] = {
    "gaussian": {
        "profile": lambda r: np.exp(-0.5 * r**2),
        "c2": 1.0,
        "continuous": True,
    },
    "exp_radial": {
        "profile": lambda r: np.exp(-r),
        "c2": 1.0,
        "continuous": True,
    },
}

# Named scattering kernels sigma(v, v') for d = 1, with their upper bound.
KERNELS: dict[str, dict] = {
    "one": {
        "sigma": lambda v, w: np.ones(np.broadcast(v, w).shape),
        "sigma_bar": 1.0,
    },
    "sin_perturbation": {
        "sigma": lambda v, w: 1.0 + 0.5 * np.sin(v) * np.sin(w),
        "sigma_bar": 1.5,
    },
    "asym_step": {
        # violates the detailed-balance-free mass-conservation condition
        "sigma": lambda v, w: 1.0 + 0.5 * (v > 0),
        "sigma_bar": 1.5,
    },
    "shifted_sin": {
        # symmetric, bounded in [1, 2]: admissible non-constant rate
        "sigma": lambda v, w: 1.0 + 0.25 * (1.0 + np.sin(v)) * (1.0 + np.sin(w)),
        "sigma_bar": 2.0,
    },
}


class ModelError(ValueError):
    """Raised for ill-formed model specifications or failed quadrature."""


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for integrals against exp(-v^2/2) dv on the line."""
    return roots_hermitenorm(n)


def named_kernel(name: str) -> tuple[Callable, float]:
    if name not in KERNELS:
        raise ModelError(f"unknown kernel {name!r}; known: {sorted(KERNELS)}")
    entry = KERNELS[name]
    return entry["sigma"], entry["sigma_bar"]


@dataclass(frozen=True)
class ModelSpec:
    """Which collision case, dimension, equilibrium profile and kernel.

    ``kernel`` is only meaningful for the scattering case.  Custom radial
    equilibria are selected by name from :data:`EQUILIBRIUM_PROFILES`.
    """

    case: str = "fokker-planck"
    d: int = 1
    equilibrium: str = "gaussian"
    kernel: str = "one"

    def __post_init__(self):
        if self.case not in CASES:
            raise ModelError(f"case must be one of {CASES}, got {self.case!r}")
        if not (isinstance(self.d, int) and self.d >= 1):
            raise ModelError(f"dimension must be a positive integer, got {self.d!r}")
        if self.equilibrium not in EQUILIBRIUM_PROFILES:
            raise ModelError(
                f"unknown equilibrium {self.equilibrium!r}; "
                f"known: {sorted(EQUILIBRIUM_PROFILES)}"
            )
        if self.case == "scattering" and self.kernel not in KERNELS:
            raise ModelError(f"unknown kernel {self.kernel!r}")

    @property
    def is_gaussian(self) -> bool:
        return self.equilibrium == "gaussian"

    @property
    def sigma_bar(self) -> float:
        if self.case != "scattering":
            raise ModelError("sigma_bar only defined for the scattering case")
        return KERNELS[self.kernel]["sigma_bar"]


@dataclass(frozen=True)
class Weight:
    """Velocity weight gamma_k(v) = (1+|v|^2)^(k/2); k = inf means 1/M.

    Finite orders must satisfy k > d so that 1/gamma_k is integrable.
    """

    k: float
    d: int = 1

    def __post_init__(self):
        if not math.isinf(self.k) and self.k <= self.d:
            raise ModelError(f"finite weight order must exceed d={self.d}, got k={self.k}")

    @property
    def is_exponential(self) -> bool:
        return math.isinf(self.k)

    def __call__(self, v: np.ndarray, equilibrium: "Equilibrium | None" = None) -> np.ndarray:
        vsq = _norm_sq(v)
        if self.is_exponential:
            if equilibrium is None:
                raise ModelError("gamma_inf needs the equilibrium to evaluate 1/M")
            return 1.0 / equilibrium(v)
        return (1.0 + vsq) ** (self.k / 2.0)

    @property
    def label(self) -> str:
        return "gamma_inf" if self.is_exponential else f"gamma_{self.k:g}"


def _norm_sq(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim <= 1:
        return v**2 if v.ndim else np.array(v**2)
    return np.sum(v**2, axis=-1)


@dataclass(frozen=True)
class Equilibrium:
    """Normalized radial equilibrium evaluator.

    ``radial(r)`` returns the normalized profile at radius r; calling the
    object evaluates it at velocity points (last axis = components for d>1).
    """

    spec: ModelSpec
    radial: Callable[[np.ndarray], np.ndarray]
    normalization: float
    c1: float
    c2: float

    def __call__(self, v: np.ndarray) -> np.ndarray:
        r = np.sqrt(_norm_sq(v))
        return self.radial(r)


def _surface_area(d: int) -> float:
    # |S^{d-1}|
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _radial_grid(c2: float, npts: int) -> tuple[np.ndarray, float]:
    # cover until exp(-c2 r) < 1e-18 with margin
    rmax = max(45.0 / c2, 45.0)
    h = rmax / npts
    r = (np.arange(npts) + 0.5) * h  # midpoint grid, avoids r = 0 endpoint
    return r, h


def _radial_integral(g: Callable[[np.ndarray], np.ndarray], d: int, c2: float,
                     npts: int = 20000) -> float:
    """Integral of g(r) r^(d-1) dr times the sphere area, composite Simpson."""
    rmax = max(45.0 / c2, 45.0)
    r = np.linspace(0.0, rmax, npts + 1)
    vals = g(r) * r ** (d - 1)
    return _surface_area(d) * float(simpson(vals, x=r))


def build_equilibrium(spec: ModelSpec) -> Equilibrium:
    """Normalize the named radial profile to unit mass and validate it.

    Raises :class:`ModelError` for profiles that fail positivity or the
    exponential domination bound at the quadrature nodes.
    """
    entry = EQUILIBRIUM_PROFILES[spec.equilibrium]
    raw = entry["profile"]
    c2 = entry["c2"]

    if spec.is_gaussian:
        z = (2.0 * math.pi) ** (spec.d / 2.0)
    else:
        z = _radial_integral(raw, spec.d, c2)
        z2 = _radial_integral(raw, spec.d, c2, npts=40000)
        if not math.isfinite(z) or z <= 0:
            raise ModelError(f"profile {spec.equilibrium!r} is not integrable")
        if abs(z - z2) > 1e-8 * abs(z):
            raise ModelError("normalization quadrature did not converge")
        # a doubled window must not change the mass: polynomial tails do
        z_wide = _surface_area(spec.d) * float(simpson(
            raw(rw := np.linspace(0.0, 2.0 * max(45.0 / c2, 45.0), 80001))
            * rw ** (spec.d - 1), x=rw))
        if abs(z_wide - z) > 1e-8 * abs(z):
            raise ModelError(f"profile {spec.equilibrium!r} is not integrable "
                             "(mass keeps growing with the window)")

    def radial(r, _raw=raw, _z=z):
        return np.asarray(_raw(np.asarray(r, dtype=float))) / _z

    rmax = max(45.0 / c2, 45.0)
    r_probe = np.linspace(0.0, 2.0 * rmax, 8001)
    probe = radial(r_probe)
    if np.any(probe < 0) or not np.all(np.isfinite(probe)):
        raise ModelError(f"profile {spec.equilibrium!r} is not positive")
    inner = (r_probe <= rmax) & (probe > 1e-250)
    if not inner.any() or float(radial(0.0)) <= 0:
        raise ModelError(f"profile {spec.equilibrium!r} is not positive")
    # domination constant fitted on the inner window, then verified on the
    # doubled window so that sub-exponential tails are caught
    c1 = float(np.max(probe[inner] * np.exp(c2 * r_probe[inner])))
    c1 = max(c1, float(radial(0.0)))
    if not np.all(probe <= c1 * np.exp(-c2 * r_probe) * (1 + 1e-10) + 1e-300):
        raise ModelError("profile is not exponentially dominated")
    return Equilibrium(spec=spec, radial=radial, normalization=z, c1=c1, c2=c2)


@dataclass(frozen=True)
class Moments:
    """Moment constants of the equilibrium entering the rate certificates.

    Theta and K are the second/fourth moments of one velocity component,
    theta the rescaled squared gradient of sqrt(M), kappa the per-case
    coupling constant and lambda_m the microscopic coercivity constant.
    """

    Theta: float
    K: float
    theta: float
    kappa: float
    lambda_m: float
    lambda_m_estimated: bool = False
    d: int = 1

    def __post_init__(self):
        if self.Theta <= 0 or self.theta <= 0:
            raise ModelError("Theta and theta must be positive")
        if self.K < self.Theta**2 * (1 - 1e-12):
            raise ModelError("fourth moment violates K >= Theta^2")


def _moments_gaussian_quadrature(d: int, n: int) -> tuple[float, float, float]:
    """(Theta, K, theta) for the Gaussian by Gauss-Hermite quadrature."""
    x, w = gauss_hermite(n)
    z = math.sqrt(2.0 * math.pi)
    theta_dir = float(np.sum(w * x**2) / z)
    k_dir = float(np.sum(w * x**4) / z)
    # |grad sqrt(M)|^2 = (|v|^2/4) M, so (4/d) * integral = (1/d) * d * Theta
    grad = theta_dir
    return theta_dir, k_dir, grad


def _moments_radial_quadrature(eq: Equilibrium, d: int, npts: int) -> tuple[float, float, float]:
    """(Theta, K, theta) for a radial profile by radial midpoint quadrature."""
    c2 = eq.c2

    def m(r):
        return eq.radial(r)

    i2 = _radial_integral(lambda r: r**2 * m(r), d, c2, npts)
    i4 = _radial_integral(lambda r: r**4 * m(r), d, c2, npts)
    theta_dir = i2 / d
    k_dir = 3.0 * i4 / (d * (d + 2.0))

    # |grad_v sqrt(M)|^2 = (M'(r))^2 / (4 M); the radial derivative comes
    # from a fixed-step central difference, independent of the quadrature grid
    dr = 1e-6

    def grad_sq(r):
        central = (m(r + dr) - m(np.abs(r - dr))) / (2.0 * dr)
        forward = (m(r + dr) - m(r)) / dr  # profiles may be kinked at r = 0
        dm = np.where(r >= dr, central, forward)
        return dm**2 / (4.0 * m(r))

    theta_grad = (4.0 / d) * _radial_integral(grad_sq, d, c2, npts)
    return float(theta_dir), float(k_dir), float(theta_grad)


def compute_moments(spec: ModelSpec, quad_points: int = 80,
                    lambda_m_estimate: float | None = None) -> Moments:
    """Compute the moment constants for an admitted equilibrium.

    For the normalized Gaussian the optimal microscopic coercivity constant
    is 1 in both collision cases; for custom radial equilibria in the
    Fokker-Planck case a caller-provided spectral estimate is required and
    flagged as estimated.

    Raises :class:`ModelError` when two quadrature refinements disagree by
    more than 1e-8 (Gaussian) or 1e-6 (radial grid) in relative terms.
    """
    eq = build_equilibrium(spec)
    if spec.is_gaussian:
        a = _moments_gaussian_quadrature(spec.d, quad_points)
        b = _moments_gaussian_quadrature(spec.d, 2 * quad_points)
        tol = 1e-8
    else:
        a = _moments_radial_quadrature(eq, spec.d, 20000)
        b = _moments_radial_quadrature(eq, spec.d, 40000)
        tol = 1e-6
    for x, y in zip(a, b):
        if abs(x - y) > tol * max(1.0, abs(y)):
            raise ModelError(f"moment quadrature did not converge: {a} vs {b}")
    theta_dir, k_dir, theta_grad = b

    if spec.case == "fokker-planck":
        kappa = math.sqrt(theta_grad)
        if spec.is_gaussian:
            lam, est = 1.0, False
        elif lambda_m_estimate is not None:
            lam, est = float(lambda_m_estimate), True
        else:
            raise ModelError(
                "custom radial equilibria need a spectral lambda_m estimate "
                "(see operators.estimate_coercivity)"
            )
    else:
        kappa = 2.0 * spec.sigma_bar * math.sqrt(theta_dir)
        lam, est = 1.0, False

    return Moments(Theta=theta_dir, K=k_dir, theta=theta_grad, kappa=kappa,
                   lambda_m=lam, lambda_m_estimated=est, d=spec.d)


@dataclass(frozen=True)
class HypothesisReport:
    """Per-hypothesis pass/fail summary with the measured residuals."""

    mass: float                      # |integral M - 1|
    positive: bool
    dominated: bool
    radial_sampled: bool
    kernel_bounds: bool | None       # scattering only
    balance_residual: float | None   # scattering only, mass-conservation check
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        ok = self.mass < 1e-8 and self.positive and self.dominated and self.radial_sampled
        if self.kernel_bounds is not None:
            ok = ok and self.kernel_bounds
        if self.balance_residual is not None:
            ok = ok and self.balance_residual < 1e-8
        return ok


def check_hypotheses(spec: ModelSpec, quad_points: int = 400) -> HypothesisReport:
    """Verify the structural hypotheses of an admitted model.

    The scattering balance residual is
    ``max_v | integral (sigma(v,v') - sigma(v',v)) M(v') dv' |``
    evaluated on a velocity grid; symmetric kernels give 0 identically.
    """
    eq = build_equilibrium(spec)

    if spec.is_gaussian:
        x, w = gauss_hermite(quad_points)
        # d-dimensional mass factorizes for the Gaussian
        mass = abs((float(np.sum(w)) / math.sqrt(2 * math.pi)) ** spec.d - 1.0)
        nodes = x
        mvals = eq.radial(np.abs(nodes))
    else:
        mass = abs(_radial_integral(eq.radial, spec.d, eq.c2, npts=40000) - 1.0)
        nodes, _ = _radial_grid(eq.c2, 4000)
        mvals = eq.radial(nodes)

    rad = np.abs(nodes)
    envelope = eq.c1 * np.exp(-eq.c2 * rad)
    # underflow to +0.0 in the far tail is acceptable; negative values are not
    positive = bool(np.all(mvals >= 0) and float(eq.radial(0.0)) > 0
                    and np.all(np.isfinite(mvals)))
    dominated = bool(np.all(mvals <= envelope * (1 + 1e-10) + 1e-300))

    # radial sampling check for d <= 2: value depends on |v| only
    radial_sampled = True
    if spec.d == 2:
        rng = np.random.default_rng(0)
        rr = rng.uniform(0.1, 5.0, size=32)
        ang = rng.uniform(0, 2 * np.pi, size=32)
        pts = np.stack([rr * np.cos(ang), rr * np.sin(ang)], axis=-1)
        radial_sampled = bool(np.allclose(eq(pts), eq.radial(rr), rtol=1e-12, atol=0))

    kernel_bounds = None
    balance = None
    if spec.case == "scattering":
        if spec.d != 1:
            raise ModelError("scattering kernels are implemented for d = 1")
        sigma, sigma_bar = named_kernel(spec.kernel)
        vmax = 12.0 if spec.is_gaussian else 40.0
        n = 801
        v = np.linspace(-vmax, vmax, n)
        h = v[1] - v[0]
        vv, ww = np.meshgrid(v, v, indexing="ij")
        sig = sigma(vv, ww)
        kernel_bounds = bool(np.all(sig >= 1.0 - 1e-12) and np.all(sig <= sigma_bar + 1e-12))
        mv = eq(v)
        resid = (sig - sig.T) @ (mv * h)
        balance = float(np.max(np.abs(resid)))

    return HypothesisReport(
        mass=float(mass),
        positive=positive,
        dominated=dominated,
        radial_sampled=radial_sampled,
        kernel_bounds=kernel_bounds,
        balance_residual=balance,
        checks={"c1": eq.c1, "c2": eq.c2},
    )
