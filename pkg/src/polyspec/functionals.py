"""Exchange energy, semi-local functionals, asymptotic fits, and the
enhancement-factor constraint auditor.

The exact exchange energy is the singular pair integral of the squared
spectral function; its continuum counterpart splits into one term per
ordered pair of neighboring reflections, each a pair integral of a
product of ball transforms over the dilated domain.  Semi-local values
are deterministic tensor-rule integrals of f evaluated on the scaled
density and its gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .enhancement import EnhancementFactor, ValidationError
from .geometry import Lattice, Polytope
from .quad import (QuadratureResult, QuadratureSpec, gauss_rule,
                   integrate_osc_semiinfinite, pair_integral_singular)
from .specfun import h, hdot, one_minus_h, omega
from .spectral import BC, SpectrumEnumeration, neighbor_isometries, s_ctm_scaled_diag

DIRAC_CX = (3.0 / math.pi) ** (1.0 / 3.0) * 0.75
_DENSITY_CLAMP = 1e-10


# ---------------------------------------------------------------------------
# semi-local integrands


@dataclass
class SemiLocalIntegrand:
    """f(a, b): density-like scalar batch (P,) and gradients (P, n).

    ``growth`` annotates the large-argument behavior ("bounded" or
    "power-p"); ``isotropic`` means f depends on b only through |b|.
    """
    fn: callable
    growth: str = "bounded"
    isotropic: bool = True
    name: str = ""

    def __call__(self, a, b):
        return self.fn(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def density_integrand() -> SemiLocalIntegrand:
    """f(a, b) = a; turns the semi-local value into twice the counting
    function (the density carries the spin factor)."""
    return SemiLocalIntegrand(lambda a, b: a, growth="power-1", name="density")


def dirac_lda_integrand() -> SemiLocalIntegrand:
    """f(2 rho, .) = -c_x rho^{4/3}: the uniform-gas exchange density."""
    def fn(a, b):
        rho = np.maximum(a, 0.0) / 2.0
        return -DIRAC_CX * rho ** (4.0 / 3.0)
    return SemiLocalIntegrand(fn, growth="power-4/3", name="dirac-lda")


def gga_integrand(factor: EnhancementFactor) -> SemiLocalIntegrand:
    """f(2 rho, 2 grad rho) = -c_x rho^{4/3} F_x(|grad rho| / rho^{4/3})."""
    def fn(a, b):
        rho = np.maximum(a, _DENSITY_CLAMP) / 2.0
        grad = np.linalg.norm(b, axis=-1) / 2.0
        red = grad / rho ** (4.0 / 3.0)
        return -DIRAC_CX * rho ** (4.0 / 3.0) * factor(red)
    return SemiLocalIntegrand(fn, growth="bounded", name="gga")


# ---------------------------------------------------------------------------
# exchange energy


def _domain_polytope(domain) -> Polytope:
    return domain.fundamental_domain() if isinstance(domain, Lattice) else domain


def exchange_energy(enum: SpectrumEnumeration, lam: float, s: float,
                    spec: QuadratureSpec | None = None) -> QuadratureResult:
    """E_x(lam): pair integral of S_lam(r, r')^2 / |r - r'|^s."""
    if lam > enum.lam_max + 1e-12:
        raise ValueError("lambda exceeds the enumeration cutoff")
    spec = spec or QuadratureSpec(rtol=1e-4, max_evals=2 ** 22)
    poly = _domain_polytope(enum.domain)
    if enum.counting(lam) == 0:
        return QuadratureResult(0.0, 0.0, 0, True)

    def kernel(r, rp):
        return enum.S(lam, r, rp) ** 2

    return pair_integral_singular(poly, kernel, s, spec)


def exchange_energy_ctm(domain, bc, lam: float, s: float,
                        spec: QuadratureSpec | None = None,
                        pairs: str = "all") -> dict:
    """Continuum exchange energy over the dilated domain.

    Returns {"total": QuadratureResult, "terms": {(word_i, word_j): dict}}
    where each term is the pair integral of h(|r - sigma_i r'|)
    h(|r - sigma_j r'|)/|r - r'|^s over the lam-dilated domain, carrying
    its determinant sign and symmetry multiplicity.  ``pairs`` may be
    "all" or "diagonal" (only sigma_i = sigma_j, enough for the decay
    diagnostics of the edge/corner terms).
    """
    bc = BC.parse(bc)
    spec = spec or QuadratureSpec(rtol=1e-4, max_evals=2 ** 21)
    poly = _domain_polytope(domain)
    n = poly.dim
    isos, signs = neighbor_isometries(domain, bc)
    scaled = poly.scaled(lam)
    pref = omega(n) ** 2 * lam ** s / (2.0 * math.pi) ** (2 * n)
    index_pairs = []
    for i in range(len(isos)):
        for j in range(i, len(isos)):
            if pairs == "diagonal" and i != j:
                continue
            index_pairs.append((i, j))
    per_spec = spec.with_(max_evals=max(spec.max_evals // max(len(index_pairs), 1),
                                        20_000))
    terms = {}
    total = 0.0
    total_err = 0.0
    evals = 0
    conv = True
    for i, j in index_pairs:
        iso_i = isos[i].scaled(lam)
        iso_j = isos[j].scaled(lam)

        def kernel(r, rp, a=iso_i, b=iso_j):
            da = np.linalg.norm(r - a.apply(rp), axis=1)
            db = np.linalg.norm(r - b.apply(rp), axis=1)
            return h(n, da) * h(n, db)

        res = pair_integral_singular(scaled, kernel, s, per_spec)
        mult = 1.0 if i == j else 2.0
        sgn = signs[i] * signs[j]
        contrib = pref * sgn * mult * res.value
        if pairs == "all":
            total += contrib
            total_err += pref * mult * res.error_estimate
        terms[(isos[i].word, isos[j].word)] = {
            "value": res.value,
            "signed_scaled": contrib,
            "sign": sgn,
            "multiplicity": mult,
            "error_estimate": res.error_estimate,
            "converged": res.converged,
        }
        evals += res.evaluations
        conv = conv and res.converged
    result = QuadratureResult(total, total_err, evals, conv)
    return {"total": result, "terms": terms, "prefactor": pref}


# ---------------------------------------------------------------------------
# semi-local functionals


def _box_rule(sides, nodes: int):
    x, w = gauss_rule(nodes)
    grids = np.meshgrid(*[x * s for s in sides], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = w * sides[0]
    for s_len in sides[1:]:
        wts = np.multiply.outer(wts, w * s_len)
    return pts, wts.ravel()


def _triangle_rule(leg: float, nodes: int):
    # Duffy map of the unit square onto {0 < y < x < leg}
    x, w = gauss_rule(nodes)
    uu, vv = np.meshgrid(x, x, indexing="ij")
    pts = np.stack([leg * uu.ravel(), leg * (uu * vv).ravel()], axis=1)
    wts = (np.multiply.outer(w, w) * uu).ravel() * leg ** 2
    return pts, wts


def domain_rule(domain, nodes: int):
    poly = _domain_polytope(domain)
    if poly.is_box:
        return _box_rule(poly.sides, nodes)
    if poly.kind == "triangle-right-isosceles":
        return _triangle_rule(float(poly.parameters[0]), nodes)
    raise ValueError(f"no tensor rule for domain kind {poly.kind!r}")


def _semilocal_eval(density_fn, domain, lam: float, f: SemiLocalIntegrand,
                    nodes: int) -> float:
    pts, wts = domain_rule(domain, nodes)
    dens, grad = density_fn(pts)
    a = np.maximum(2.0 * dens, _DENSITY_CLAMP)
    vals = f(a, 2.0 * grad)
    n = _domain_polytope(domain).dim
    return lam ** n * float(np.dot(wts, vals))


def _auto_nodes(domain, lam: float) -> int:
    poly = _domain_polytope(domain)
    lmax = max(poly.sides) if poly.is_box else float(poly.parameters[0])
    return min(max(int(0.8 * lam * lmax) + 32, 48), 480)


def semilocal_value(enum: SpectrumEnumeration, lam: float, f: SemiLocalIntegrand,
                    spec: QuadratureSpec | None = None,
                    nodes: int | None = None) -> QuadratureResult:
    """F(lam) = integral over the dilated domain of f(2 S, 2 grad S).

    Deterministic tensor quadrature; the error estimate compares two
    node counts.  Density arguments below 1e-10 are clamped (the
    integrand is only locally bounded at zero density).
    """
    if lam > enum.lam_max + 1e-12:
        raise ValueError("lambda exceeds the enumeration cutoff")
    nodes = nodes or _auto_nodes(enum.domain, lam)

    def density(pts):
        return enum.scaled_diag(lam, pts)

    coarse = _semilocal_eval(density, enum.domain, lam, f, max(nodes * 2 // 3, 24))
    fine = _semilocal_eval(density, enum.domain, lam, f, nodes)
    err = abs(fine - coarse)
    spec = spec or QuadratureSpec(rtol=1e-7, max_evals=10_000)
    poly = _domain_polytope(enum.domain)
    evals = nodes ** poly.dim + max(nodes * 2 // 3, 24) ** poly.dim
    return QuadratureResult(fine, err, evals,
                            err <= spec.rtol * max(1.0, abs(fine)))


def semilocal_value_ctm(domain, bc, lam: float, f: SemiLocalIntegrand,
                        spec: QuadratureSpec | None = None,
                        nodes: int | None = None) -> QuadratureResult:
    """Continuum counterpart of ``semilocal_value``."""
    bc = BC.parse(bc)
    nodes = nodes or _auto_nodes(domain, lam)

    def density(pts):
        return s_ctm_scaled_diag(domain, bc, lam, pts)

    coarse = _semilocal_eval(density, domain, lam, f, max(nodes * 2 // 3, 24))
    fine = _semilocal_eval(density, domain, lam, f, nodes)
    err = abs(fine - coarse)
    spec = spec or QuadratureSpec(rtol=1e-7, max_evals=10_000)
    poly = _domain_polytope(domain)
    evals = nodes ** poly.dim + max(nodes * 2 // 3, 24) ** poly.dim
    return QuadratureResult(fine, err, evals,
                            err <= spec.rtol * max(1.0, abs(fine)))


# ---------------------------------------------------------------------------
# two-term fits


@dataclass
class AsymptoticFit:
    exponents: tuple
    coefficients: np.ndarray      # (A, B)
    covariance: np.ndarray        # 2 x 2
    residual_norm: float
    drift: list = field(default_factory=list)

    @property
    def leading(self) -> float:
        return float(self.coefficients[0])

    @property
    def second(self) -> float:
        return float(self.coefficients[1])


def fit_two_term(records, exponents, window=None) -> AsymptoticFit:
    """Weighted least squares for value ~ A lam^p + B lam^q (p > q).

    Residuals are weighted by lam^{-q}, i.e. measured on the scale of
    the subleading term.  ``window = (lo, hi)`` restricts the records.
    The drift list reports B refit on nested windows with rising lower
    endpoints, a stability diagnostic for the subleading coefficient.
    """
    p, q = exponents
    if p <= q:
        raise ValueError("exponents must satisfy p > q")
    data = np.array([(float(lam), float(v)) for lam, v in records])
    if window is not None:
        keep = (data[:, 0] >= window[0]) & (data[:, 0] <= window[1])
        data = data[keep]
    if len(data) < 4:
        raise ValueError("need at least 4 records to fit two terms")
    lam = data[:, 0]
    y = data[:, 1] / lam ** q
    design = np.stack([lam ** (p - q), np.ones_like(lam)], axis=1)
    cond = np.linalg.cond(design)
    if cond > 1e12:
        raise ValueError(f"ill-conditioned design matrix (cond = {cond:.2e})")
    coef, res, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = design @ coef - y
    dof = max(len(lam) - 2, 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    drift = []
    uniq = np.unique(lam)
    for lo in uniq[:-3]:
        sel = lam >= lo
        if sel.sum() < 4:
            break
        c_sub, *_ = np.linalg.lstsq(design[sel], y[sel], rcond=None)
        drift.append((float(lo), float(c_sub[1])))
    return AsymptoticFit((p, q), coef, cov, float(np.linalg.norm(resid)), drift)


# ---------------------------------------------------------------------------
# integral constraint auditor


def gga_rhs() -> float:
    return (1.0 + math.log(2.0)) / (8.0 * DIRAC_CX)


def _reduced_gradient_profile(tau: np.ndarray):
    """(1 - h_3(tau))^{4/3} and the reduced-gradient argument at depth tau."""
    omh = one_minus_h(3, tau)
    hd = np.abs(hdot(3, tau))
    pow43 = omh ** (4.0 / 3.0)
    kf = 2.0 * (3.0 * math.pi ** 2) ** (1.0 / 3.0)
    with np.errstate(divide="ignore"):
        red = np.where(pow43 > 0.0, kf * hd / pow43, np.inf)
    return pow43, red


def gga_constraint(factor: EnhancementFactor,
                   spec: QuadratureSpec | None = None) -> dict:
    """Audit an enhancement factor against the boundary-layer identity.

    Returns both sides, the defect, and quadrature diagnostics.  Raises
    ``ValidationError`` when the integrand does not vanish at the
    boundary (enhancement factor growing too fast).
    """
    spec = spec or QuadratureSpec(rtol=1e-9, max_evals=2_000_000)
    # sampled-limit admissibility: (1 - h)^{4/3} F_x(arg) -> 0 as tau -> 0
    probe = np.logspace(-2, -7, 11)
    pow43, red = _reduced_gradient_profile(probe)
    limit_vals = pow43 * factor(np.minimum(red, 1e300))
    if not (np.all(np.isfinite(limit_vals)) and abs(limit_vals[-1]) < 1e-6
            and abs(limit_vals[-1]) <= abs(limit_vals[0]) + 1e-12):
        raise ValidationError(
            "divergent inner limit: (1-h)^{4/3} F_x does not vanish at the boundary")

    def integrand(tau):
        pow43_t, red_t = _reduced_gradient_profile(np.asarray(tau, dtype=float))
        vals = pow43_t * factor(np.minimum(red_t, 1e300))
        return 1.0 - vals

    scale = 1.0 / (2.0 * (3.0 * math.pi ** 2) ** (1.0 / 3.0))
    res = integrate_osc_semiinfinite(integrand, 2.0 * math.pi, spec)
    lhs = scale * res.value
    rhs = gga_rhs()
    return {
        "lhs": lhs,
        "rhs": rhs,
        "defect": lhs - rhs,
        "lhs_error_estimate": scale * res.error_estimate,
        "evaluations": res.evaluations,
        "converged": res.converged,
    }


def find_matching_parameter(family, lo: float, hi: float,
                            spec: QuadratureSpec | None = None,
                            tol: float = 1e-8, max_iter: int = 200) -> dict:
    """Bisection root of defect(a) = 0 for a one-parameter family
    a -> EnhancementFactor.  The defect is monotone decreasing in any
    family that grows pointwise with a."""
    spec = spec or QuadratureSpec(rtol=1e-10, max_evals=2_000_000)

    def defect(a):
        return gga_constraint(family(a), spec)["defect"]

    d_lo = defect(lo)
    d_hi = defect(hi)
    if d_lo * d_hi > 0:
        raise ValueError(f"defect does not change sign on [{lo}, {hi}] "
                         f"({d_lo:.3e}, {d_hi:.3e})")
    a, b, da = lo, hi, d_lo
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        dm = defect(mid)
        if abs(dm) <= tol:
            return {"parameter": mid, "defect": dm}
        if da * dm > 0:
            a, da = mid, dm
        else:
            b = mid
    return {"parameter": 0.5 * (a + b), "defect": defect(0.5 * (a + b))}
