"""Constants of the two-term expansions.

The leading-exchange, finite-size and boundary-layer constants are
radially symmetric integrals of products of the ball transform h_n; the
angular parts are integrated out analytically here, which shrinks them
to one semi-infinite oscillatory integral (leading, finite-size) plus a
weighted family of such integrals (boundary layer):

    c_x1 =  pref * n omega_n * I[t^{n-1-s} h^2]
    c_fs = -pref * sigma_{n-2}/(n-1) * I[t^{n-s} h^2]
    c_bl =  pref * sigma_{n-2} * (C_Q(n,s) I[t^{n-s} h^2] -+ 2 T_P)
    T_P  =  int_0^1 alpha^{n-1-s} E_n(alpha) I[t^{n-s} h(t) h(alpha t)] dalpha

with pref = omega_n^2/(2 pi)^{2n}, C_Q an elementary angular constant
and E_n an elliptic-type kernel (E_3 = atanh(a)/a, E_2 = K(a)).  The
periodic boundary-layer constant is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad as _scipy_quad
from scipy.special import ellipk as _ellipk

from .quad import QuadratureResult, QuadratureSpec, gauss_rule, integrate_osc_semiinfinite
from .specfun import h, hdot, omega, sphere_area

_ANGULAR_CACHE: dict = {}


def _validate(n: int, s: float):
    if n < 2:
        raise ValueError("dimension must be >= 2")
    if not 0.0 < s < n:
        raise ValueError("s must lie in (0, n)")


def _sigma(n: int) -> float:
    """Surface measure of S^{n-2} inside R^{n-1} (2 for n = 2)."""
    return sphere_area(n - 1)


def _pref(n: int) -> float:
    return omega(n) ** 2 / (2.0 * math.pi) ** (2 * n)


def _radial_h2(n: int, power: float, spec: QuadratureSpec) -> QuadratureResult:
    """integral of t^power h_n(t)^2 over (0, inf)."""
    return integrate_osc_semiinfinite(
        lambda t: t ** power * h(n, t) ** 2, math.pi, spec,
        endpoint_power=power)


def c_x1(n: int, s: float, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Leading exchange constant."""
    _validate(n, s)
    spec = spec or QuadratureSpec(rtol=1e-7, max_evals=400_000)
    core = _radial_h2(n, n - 1 - s, spec)
    scale = _pref(n) * sphere_area(n)
    return QuadratureResult(scale * core.value, scale * core.error_estimate,
                            core.evaluations, core.converged)


def c_fs(n: int, s: float, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Finite-size constant (negative)."""
    _validate(n, s)
    spec = spec or QuadratureSpec(rtol=1e-5, max_evals=800_000)
    core = _radial_h2(n, n - s, spec)
    scale = _pref(n) * _sigma(n) / (n - 1.0)
    return QuadratureResult(-scale * core.value, scale * core.error_estimate,
                            core.evaluations, core.converged)


def _angular_cq(n: int, s: float) -> float:
    """C_Q = int_0^{pi/2} cos^{n-2}(phi) V_s(phi) dphi with
    V_s(phi) = int_0^{sin phi} (cos^2 phi + x^2)^{-s/2} dx.

    Equals log 2 for (n, s) = (3, 1).  Plain adaptive quadrature; the
    integrand has only integrable endpoint singularities.
    """
    key = (n, round(s, 12))
    if key in _ANGULAR_CACHE:
        return _ANGULAR_CACHE[key]

    def inner(phi):
        c2 = math.cos(phi) ** 2
        val, _ = _scipy_quad(lambda x: (c2 + x * x) ** (-s / 2.0),
                             0.0, math.sin(phi), epsabs=1e-13, epsrel=1e-12)
        return math.cos(phi) ** (n - 2) * val

    val, _ = _scipy_quad(inner, 0.0, math.pi / 2.0,
                         epsabs=1e-11, epsrel=1e-10, limit=300)
    _ANGULAR_CACHE[key] = val
    return val


def _elliptic_kernel(n: int, alpha: np.ndarray) -> np.ndarray:
    """E_n(alpha) = int_0^{pi/2} cos^{n-2}(psi) / sqrt(1 - alpha^2 cos^2 psi) dpsi."""
    alpha = np.asarray(alpha, dtype=float)
    if n == 3:
        return np.arctanh(alpha) / alpha
    if n == 2:
        return _ellipk(alpha ** 2)
    x, w = gauss_rule(64)
    psi = math.pi / 2.0 * x
    cosp = np.cos(psi)
    vals = (cosp ** (n - 2)) / np.sqrt(1.0 - np.outer(alpha ** 2, cosp ** 2))
    return math.pi / 2.0 * vals @ w


def _cross_radial(n: int, s: float, alpha: float,
                  spec: QuadratureSpec) -> QuadratureResult:
    """integral of t^{n-s} h_n(t) h_n(alpha t) over (0, inf)."""
    return integrate_osc_semiinfinite(
        lambda t: t ** (n - s) * h(n, t) * h(n, alpha * t),
        math.pi, spec, endpoint_power=n - s)


def _tp_nodes(n: int, s: float):
    """Quadrature nodes/weights for the alpha integral of T_P.

    Splits at 0.98; the elliptic kernel's log singularity at alpha = 1
    is handled by the substitution alpha = 1 - exp(-v).
    """
    x, w = gauss_rule(48)
    a1 = 0.98 * x
    w1 = 0.98 * w
    # upper cap keeps 1 - alpha representable; the truncated tail is
    # O(exp(-v1) * v1), far below the target tolerances
    v0, v1 = -math.log(0.02), 28.0
    v = v0 + (v1 - v0) * x
    a2 = 1.0 - np.exp(-v)
    w2 = (v1 - v0) * w * np.exp(-v)
    return np.concatenate([a1, a2]), np.concatenate([w1, w2])


def _t_p(n: int, s: float, spec: QuadratureSpec) -> tuple[float, float, int]:
    nodes, weights = _tp_nodes(n, s)
    kern = weights * nodes ** (n - 1 - s) * _elliptic_kernel(n, nodes)
    inner_spec = spec.with_(rtol=max(spec.rtol * 0.1, 1e-8),
                            max_evals=max(spec.max_evals // 50, 60_000))
    total = 0.0
    err = 0.0
    evals = 0
    for a, k in zip(nodes, kern):
        res = _cross_radial(n, s, float(a), inner_spec)
        total += k * res.value
        err += abs(k) * res.error_estimate
        evals += res.evaluations
    return total, err, evals


def c_bl(n: int, s: float, bc, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Boundary-layer constant for the given boundary conditions.

    Periodic is exactly zero; Dirichlet and Neumann differ by the sign
    of the cross term.
    """
    _validate(n, s)
    bc_name = str(getattr(bc, "value", bc)).strip().lower()
    if bc_name == "periodic":
        return QuadratureResult(0.0, 0.0, 0, True)
    if bc_name not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    spec = spec or QuadratureSpec(rtol=1e-5, max_evals=3_000_000)
    sign = -1.0 if bc_name == "dirichlet" else 1.0
    quad_part = _radial_h2(n, n - s, spec)
    cq = _angular_cq(n, s)
    tp, tp_err, tp_evals = _t_p(n, s, spec)
    scale = _pref(n) * _sigma(n)
    value = scale * (cq * quad_part.value + 2.0 * sign * tp)
    err = scale * (cq * quad_part.error_estimate + 2.0 * tp_err)
    return QuadratureResult(value, err, quad_part.evaluations + tp_evals,
                            quad_part.converged)


@dataclass
class ExchangeConstants:
    n: int
    s: float
    c_x1: QuadratureResult
    c_fs: QuadratureResult
    c_bl_dir: QuadratureResult
    c_bl_neu: QuadratureResult

    @property
    def converged(self) -> bool:
        return (self.c_x1.converged and self.c_fs.converged
                and self.c_bl_dir.converged and self.c_bl_neu.converged)


def exchange_constants(n: int, s: float,
                       spec: QuadratureSpec | None = None) -> ExchangeConstants:
    return ExchangeConstants(n, s, c_x1(n, s, spec), c_fs(n, s, spec),
                             c_bl(n, s, "dirichlet", spec),
                             c_bl(n, s, "neumann", spec))


# ---------------------------------------------------------------------------
# boundary density profile


@dataclass
class BoundaryProfile:
    """Bulk value and boundary-layer profile of the scaled density pair."""
    n: int

    @property
    def scale(self) -> float:
        return 2.0 * omega(self.n) / (2.0 * math.pi) ** self.n

    @property
    def nu0_scalar(self) -> float:
        return self.scale

    def nu0(self) -> np.ndarray:
        out = np.zeros(1 + self.n)
        out[0] = self.scale
        return out

    def nu1(self, tau):
        """(scalar part, gradient magnitude) of the profile at depth tau."""
        tau = np.asarray(tau, dtype=float)
        return self.scale * h(self.n, 2.0 * tau), self.scale * 2.0 * np.abs(
            hdot(self.n, 2.0 * tau))

    def nu1_vector(self, tau: float, normal: np.ndarray) -> np.ndarray:
        out = np.zeros(1 + self.n)
        out[0] = self.scale * h(self.n, 2.0 * tau)
        out[1:] = self.scale * 2.0 * hdot(self.n, 2.0 * tau) * normal
        return out


def nu_profile(n: int) -> BoundaryProfile:
    if n < 2:
        raise ValueError("dimension must be >= 2")
    return BoundaryProfile(n)


def semilocal_surface_coefficient(f, poly, bc,
                                  spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Surface coefficient of the two-term expansion of a semi-local
    functional: the boundary integral of the depth-profile defect.

    ``f`` is a SemiLocalIntegrand-like object: callable as f(a, b) with
    a the density-like scalars (P,) and b the gradient vectors (P, n);
    an ``isotropic`` attribute (default True) lets one inner integral
    serve every face.
    """
    bc_name = str(getattr(bc, "value", bc)).strip().lower()
    if bc_name == "periodic":
        return QuadratureResult(0.0, 0.0, 0, True)
    sign = -1.0 if bc_name == "dirichlet" else 1.0
    spec = spec or QuadratureSpec(rtol=1e-6, max_evals=600_000)
    profile = nu_profile(poly.dim)
    nu0s = profile.nu0_scalar
    zero_b = np.zeros((1, poly.dim))
    f0 = float(np.asarray(f(np.array([nu0s]), zero_b))[0])

    def face_inner(normal) -> QuadratureResult:
        def integrand(tau):
            hs = h(poly.dim, 2.0 * tau)
            hd = hdot(poly.dim, 2.0 * tau)
            a = nu0s * (1.0 + sign * hs)
            b = (profile.scale * 2.0 * sign * hd)[:, None] * normal[None, :]
            return np.asarray(f(a, b)) - f0

        return integrate_osc_semiinfinite(integrand, math.pi, spec)

    isotropic = bool(getattr(f, "isotropic", True))
    total = 0.0
    err = 0.0
    evals = 0
    conv = True
    if isotropic:
        e_n = np.zeros(poly.dim)
        e_n[-1] = 1.0
        res = face_inner(e_n)
        total = res.value * poly.boundary_area
        err = res.error_estimate * poly.boundary_area
        evals = res.evaluations
        conv = res.converged
    else:
        for face in poly.faces:
            res = face_inner(face.normal)
            total += res.value * face.measure
            err += res.error_estimate * face.measure
            evals += res.evaluations
            conv = conv and res.converged
    return QuadratureResult(total, err, evals, conv)
