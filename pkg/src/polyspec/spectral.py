"""Exact eigenbases and spectral functions.

Supported exact bases: boxes in any dimension (Dirichlet sine products,
Neumann cosine products), the right-isosceles triangle in 2D through
(anti)symmetrized square modes, and lattice fundamental domains with
the periodic Laplacian.  ``SpectrumEnumeration`` holds the modes sorted
by eigenvalue, so every cutoff lambda <= lam_max is a prefix slice.

The continuum approximation ``s_ctm`` sums the normalized ball
transform over the neighboring reflections (with determinant signs for
Dirichlet) or neighboring translations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .backend import kernels
from .geometry import Isometry, Lattice, Polytope, reflection_group
from .specfun import h, hdot, omega

_TIE = 1e-12


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    PERIODIC = "periodic"

    @staticmethod
    def parse(value) -> "BoundaryCondition":
        if isinstance(value, BoundaryCondition):
            return value
        return BoundaryCondition(str(value).strip().lower())


BC = BoundaryCondition


@dataclass
class Mode:
    """One eigenpair with -Laplace e = lam^2 e; evaluators are vectorized."""
    lam: float
    index: tuple
    evaluate: callable
    gradient: callable


class SpectrumEnumeration:
    """Sorted exhaustive eigenbasis of a domain/BC pair up to lam_max."""

    def __init__(self, domain, bc: BoundaryCondition, lam_max: float,
                 lams: np.ndarray, kind: str, data: dict):
        self.domain = domain
        self.bc = bc
        self.lam_max = lam_max
        self.lams = lams
        self.kind = kind
        self._d = data

    def __len__(self) -> int:
        return len(self.lams)

    @property
    def dim(self) -> int:
        return self._d["n"]

    def counting(self, lam) -> np.ndarray | int:
        lam_arr = np.asarray(lam, dtype=float)
        out = np.searchsorted(self.lams, lam_arr + _TIE, side="right")
        return int(out) if lam_arr.ndim == 0 else out

    def _check(self, lam: float):
        if lam > self.lam_max + _TIE:
            raise ValueError(f"lambda {lam} exceeds enumeration cutoff {self.lam_max}")

    # -- spectral function -------------------------------------------------

    def S(self, lam: float, r, rp) -> np.ndarray | float:
        """S_lam(r, r') = sum_{lam_j <= lam} e_j(r) e_j(r')."""
        self._check(lam)
        n_modes = self.counting(lam)
        r_arr = np.atleast_2d(np.asarray(r, dtype=float))
        rp_arr = np.atleast_2d(np.asarray(rp, dtype=float))
        scalar = np.asarray(r).ndim == 1
        if n_modes == 0:
            out = np.zeros(r_arr.shape[0])
            return float(out[0]) if scalar else out
        out = self._s_impl(n_modes, r_arr, rp_arr)
        return float(out[0]) if scalar else out

    def _s_impl(self, n_modes: int, r, rp) -> np.ndarray:
        d = self._d
        if self.kind == "box":
            return kernels.s_pairs(d["base"], d["m_idx"][:n_modes],
                                   d["amps"][:n_modes], d["trig"], r, rp)
        if self.kind == "triangle":
            sq = d["square"]
            nsq = sq.counting(self.lams[n_modes - 1])
            direct = sq._s_impl(nsq, r, rp)
            swapped = sq._s_impl(nsq, r, rp[:, ::-1])
            return direct - swapped if self.bc == BC.DIRICHLET else direct + swapped
        # torus
        kv, w = d["kvecs"][:d["half_count"][n_modes]], d["weights"][:d["half_count"][n_modes]]
        return kernels.cos_pairs(kv, w, r - rp) / d["volume"]

    def grad_S(self, lam: float, r, rp):
        """(S, grad_r S, grad_r' S) at paired points."""
        self._check(lam)
        n_modes = self.counting(lam)
        r_arr = np.atleast_2d(np.asarray(r, dtype=float))
        rp_arr = np.atleast_2d(np.asarray(rp, dtype=float))
        if n_modes == 0:
            z = np.zeros(r_arr.shape[0])
            return z, np.zeros_like(r_arr), np.zeros_like(rp_arr)
        return self._grad_impl(n_modes, r_arr, rp_arr)

    def _grad_impl(self, n_modes: int, r, rp):
        d = self._d
        if self.kind == "box":
            return kernels.s_pairs_grad(d["base"], d["m_idx"][:n_modes],
                                        d["amps"][:n_modes], d["trig"], r, rp)
        if self.kind == "triangle":
            sq = d["square"]
            nsq = sq.counting(self.lams[n_modes - 1])
            s1, gx1, gy1 = sq._grad_impl(nsq, r, rp)
            s2, gx2, gy2 = sq._grad_impl(nsq, r, rp[:, ::-1])
            sgn = -1.0 if self.bc == BC.DIRICHLET else 1.0
            return (s1 + sgn * s2, gx1 + sgn * gx2, gy1 + sgn * gy2[:, ::-1])
        nsel = d["half_count"][n_modes]
        kv, w = d["kvecs"][:nsel], d["weights"][:nsel]
        s, g = kernels.cos_pairs_grad(kv, w, r - rp)
        vol = d["volume"]
        return s / vol, g / vol, -g / vol

    def S_scaled(self, lam: float, r) -> np.ndarray | float:
        """lam^{-n} S_lam(r/lam, r/lam) for r in the dilated domain."""
        r_arr = np.asarray(r, dtype=float) / lam
        return self.S(lam, r_arr, r_arr) / lam ** self.dim

    def scaled_diag(self, lam: float, x):
        """Scaled diagonal and its gradient at unscaled points x in Omega.

        Returns (lam^{-n} S_lam(x,x), lam^{-n-1} d/dx S_lam(x,x)).
        """
        self._check(lam)
        x_arr = np.atleast_2d(np.asarray(x, dtype=float))
        n = self.dim
        if self.kind == "torus":
            nmodes = self.counting(lam)
            dens = np.full(x_arr.shape[0], nmodes / self._d["volume"])
            return dens / lam ** n, np.zeros_like(x_arr)
        s, gx, gy = self.grad_S(lam, x_arr, x_arr)
        return s / lam ** n, (gx + gy) / lam ** (n + 1)

    def weighted_sum(self, weight_fn, r, rp) -> np.ndarray:
        """sum_j f(lam_j) e_j(r) e_j(r') over the whole enumeration."""
        r_arr = np.atleast_2d(np.asarray(r, dtype=float))
        rp_arr = np.atleast_2d(np.asarray(rp, dtype=float))
        w = np.asarray(weight_fn(self.lams), dtype=float)
        d = self._d
        if self.kind == "box":
            er = kernels.basis_matrix(d["base"], d["m_idx"], d["amps"], d["trig"], r_arr)
            ep = kernels.basis_matrix(d["base"], d["m_idx"], d["amps"], d["trig"], rp_arr)
            return (er * ep) @ w
        if self.kind == "triangle":
            sq = d["square"]
            sd = sq._d
            er = kernels.basis_matrix(sd["base"], sd["m_idx"], sd["amps"], sd["trig"], r_arr)
            ep = kernels.basis_matrix(sd["base"], sd["m_idx"], sd["amps"], sd["trig"], rp_arr)
            et = kernels.basis_matrix(sd["base"], sd["m_idx"], sd["amps"], sd["trig"],
                                      rp_arr[:, ::-1])
            wsq = np.asarray(weight_fn(sq.lams), dtype=float)
            sgn = -1.0 if self.bc == BC.DIRICHLET else 1.0
            return (er * ep) @ wsq + sgn * (er * et) @ wsq
        kv = d["kvecs"]
        wk = d["weights"] * np.asarray(weight_fn(d["half_lams"]), dtype=float)
        return kernels.cos_pairs(kv, wk, r_arr - rp_arr) / d["volume"]

    # -- mode access for tests --------------------------------------------

    def modes(self) -> list[Mode]:
        d = self._d
        out = []
        if self.kind == "box":
            base, amps, trig = d["base"], d["amps"], d["trig"]
            for j in range(len(self.lams)):
                m = d["m_idx"][j:j + 1]
                a = amps[j:j + 1]
                out.append(Mode(
                    float(self.lams[j]), tuple(int(v) for v in d["m_idx"][j]),
                    (lambda pts, m=m, a=a:
                     kernels.basis_matrix(base, m, a, trig, np.atleast_2d(pts))[:, 0]),
                    (lambda pts, m=m, a=a:
                     _box_grad_direct(base, m, a, trig, pts)),
                ))
            return out
        if self.kind == "triangle":
            sgn = -1.0 if self.bc == BC.DIRICHLET else 1.0
            leg = d["leg"]
            for j in range(len(self.lams)):
                mk = d["pairs"][j]
                out.append(Mode(float(self.lams[j]), tuple(mk),
                                _tri_mode(leg, mk, self.bc, sgn),
                                _tri_mode_grad(leg, mk, self.bc, sgn)))
            return out
        vol = d["volume"]
        for j, (k, phase) in enumerate(d["mode_list"]):
            out.append(Mode(float(self.lams[j]), (tuple(k), phase),
                            _torus_mode(np.asarray(k), phase, vol),
                            _torus_mode_grad(np.asarray(k), phase, vol)))
        return out


def _box_grad_direct(base, m, a, trig, pts):
    pts = np.atleast_2d(pts)
    n = pts.shape[1]
    grad = np.empty_like(pts)
    for d in range(n):
        th = base[d] * m[0, d] * pts[:, d]
        band = np.sin(th) if trig == 0 else np.cos(th)
        dband = np.cos(th) if trig == 0 else -np.sin(th)
        others = a[0] * np.ones(len(pts))
        for dd in range(n):
            if dd != d:
                thd = base[dd] * m[0, dd] * pts[:, dd]
                others *= np.sin(thd) if trig == 0 else np.cos(thd)
        grad[:, d] = others * dband * base[d] * m[0, d]
    return grad


def _tri_mode(leg, mk, bc, sgn):
    m, k = int(mk[0]), int(mk[1])

    def ev(pts):
        pts = np.atleast_2d(pts)
        b = math.pi / leg
        if bc == BC.DIRICHLET:
            phi = lambda q, z: math.sqrt(2.0 / leg) * np.sin(b * q * z)
        else:
            phi = lambda q, z: (math.sqrt(1.0 / leg) if q == 0
                                else math.sqrt(2.0 / leg)) * np.cos(b * q * z)
        val = phi(m, pts[:, 0]) * phi(k, pts[:, 1]) + sgn * phi(k, pts[:, 0]) * phi(m, pts[:, 1])
        if m == k:
            val /= math.sqrt(2.0)  # 2 phi phi collapses to sqrt(2) phi phi
        return val

    return ev


def _tri_mode_grad(leg, mk, bc, sgn):
    ev = _tri_mode(leg, mk, bc, sgn)

    def grad(pts, eps=1e-6):
        pts = np.atleast_2d(pts)
        out = np.empty_like(pts)
        for d in range(2):
            dd = np.zeros(2)
            dd[d] = eps
            out[:, d] = (ev(pts + dd) - ev(pts - dd)) / (2 * eps)
        return out

    return grad


def _torus_mode(k, phase, vol):
    def ev(pts):
        pts = np.atleast_2d(pts)
        ph = pts @ k
        if phase == "const":
            return np.full(len(pts), 1.0 / math.sqrt(vol))
        if phase == "cos":
            return math.sqrt(2.0 / vol) * np.cos(ph)
        return math.sqrt(2.0 / vol) * np.sin(ph)
    return ev


def _torus_mode_grad(k, phase, vol):
    def grad(pts):
        pts = np.atleast_2d(pts)
        ph = pts @ k
        if phase == "const":
            return np.zeros_like(pts)
        if phase == "cos":
            return -math.sqrt(2.0 / vol) * np.sin(ph)[:, None] * k
        return math.sqrt(2.0 / vol) * np.cos(ph)[:, None] * k
    return grad


# ---------------------------------------------------------------------------
# enumeration constructors


def enumerate_modes(domain, bc, lam_max: float,
                    budget: int = 2_000_000) -> SpectrumEnumeration:
    """Exhaustive sorted eigenbasis for a supported domain/BC pair."""
    bc = BC.parse(bc)
    if lam_max <= 0:
        raise ValueError("lam_max must be positive")
    if isinstance(domain, Lattice):
        if bc != BC.PERIODIC:
            raise ValueError("lattice domains take periodic boundary conditions")
        return _enumerate_torus(domain, lam_max, budget)
    if not isinstance(domain, Polytope):
        raise ValueError("domain must be a Polytope or a Lattice")
    if bc == BC.PERIODIC:
        raise ValueError("periodic boundary conditions need a Lattice domain")
    if domain.is_box:
        return _enumerate_box(domain, bc, lam_max, budget)
    if domain.kind == "triangle-right-isosceles":
        return _enumerate_triangle(domain, bc, lam_max, budget)
    raise ValueError(f"no exact eigenbasis for domain kind {domain.kind!r}")


def _enumerate_box(domain: Polytope, bc, lam_max, budget) -> SpectrumEnumeration:
    sides = np.array(domain.sides, dtype=float)
    n = len(sides)
    base = math.pi / sides
    start = 1 if bc == BC.DIRICHLET else 0
    caps = np.floor(lam_max / base).astype(int)
    counts = np.maximum(caps - start + 1, 0)
    if np.prod(counts.astype(float)) > 4 * budget:
        raise ValueError("mode budget exceeded; lower lam_max")
    axes = [np.arange(start, c + 1) for c in caps]
    grid = np.meshgrid(*axes, indexing="ij")
    m_idx = np.stack([g.ravel() for g in grid], axis=1)
    lam2 = ((m_idx * base) ** 2).sum(axis=1)
    keep = lam2 <= (lam_max + _TIE) ** 2
    m_idx = m_idx[keep]
    lams = np.sqrt(lam2[keep])
    if len(lams) > budget:
        raise ValueError("mode budget exceeded; lower lam_max")
    order = np.argsort(lams, kind="stable")
    m_idx = np.ascontiguousarray(m_idx[order], dtype=np.int32)
    lams = lams[order]
    if bc == BC.DIRICHLET:
        amps = np.full(len(lams), math.sqrt(np.prod(2.0 / sides)))
        trig = 0
    else:
        amps = np.sqrt(np.prod(np.where(m_idx > 0, 2.0, 1.0) / sides, axis=1))
        trig = 1
    data = {"n": n, "base": base, "m_idx": m_idx, "amps": amps, "trig": trig}
    return SpectrumEnumeration(domain, bc, lam_max, lams, "box", data)


def _enumerate_triangle(domain: Polytope, bc, lam_max, budget) -> SpectrumEnumeration:
    leg = float(domain.parameters[0])
    square = _enumerate_box(_square_for_triangle(leg), bc, lam_max, budget)
    b = math.pi / leg
    cap = int(lam_max / b) + 1
    pairs = []
    lams = []
    lo = 1 if bc == BC.DIRICHLET else 0
    for m in range(lo, cap + 1):
        for k in range(lo, m + 1):
            if bc == BC.DIRICHLET and k == m:
                continue
            lam = b * math.hypot(m, k)
            if lam <= lam_max + _TIE:
                pairs.append((m, k))
                lams.append(lam)
    lams = np.array(lams)
    order = np.argsort(lams, kind="stable")
    data = {
        "n": 2, "leg": leg, "square": square,
        "pairs": [pairs[i] for i in order],
    }
    return SpectrumEnumeration(domain, bc, lam_max, lams[order], "triangle", data)


def _square_for_triangle(leg: float) -> Polytope:
    from .geometry import make_polytope
    return make_polytope("box", [leg, leg])


def _enumerate_torus(lattice: Lattice, lam_max, budget) -> SpectrumEnumeration:
    ks = lattice.dual_points_below(lam_max, budget)
    norms = np.linalg.norm(ks, axis=1)
    if len(ks) > budget:
        raise ValueError("mode budget exceeded; lower lam_max")
    # full mode list (for counting): one mode per lattice vector
    order = np.argsort(norms, kind="stable")
    ks = ks[order]
    norms = norms[order]
    # half lattice for the real cosine kernel: k = 0 weight 1, half weight 2
    sel = _half_lattice_mask(ks)
    kv = np.ascontiguousarray(ks[sel])
    half_lams = norms[sel]
    weights = np.where(half_lams > 0, 2.0, 1.0)
    # half_count[n] = number of half-lattice rows among the first n modes
    half_count = np.concatenate([[0], np.cumsum(sel.astype(int))])
    mode_list = []
    for k, nm in zip(ks, norms):
        if nm == 0:
            mode_list.append((k, "const"))
        elif _half_lattice_mask(k[None, :])[0]:
            mode_list.append((k, "cos"))
        else:
            mode_list.append((-k, "sin"))
    data = {
        "n": lattice.dim, "volume": lattice.volume, "kvecs": kv,
        "weights": weights, "half_lams": half_lams,
        "half_count": half_count, "mode_list": mode_list,
    }
    return SpectrumEnumeration(lattice, BC.PERIODIC, lam_max, norms, "torus", data)


def _half_lattice_mask(ks: np.ndarray) -> np.ndarray:
    """k = 0 and one of each +-k pair (lexicographically positive)."""
    sel = np.zeros(len(ks), dtype=bool)
    for i, k in enumerate(ks):
        for c in k:
            if c > 1e-12:
                sel[i] = True
                break
            if c < -1e-12:
                break
        else:
            sel[i] = True  # k = 0
    return sel


# ---------------------------------------------------------------------------
# continuum spectral function


_NEIGHBOR_CACHE: dict = {}


def neighbor_isometries(domain, bc) -> tuple[list[Isometry], np.ndarray]:
    """Neighboring reflections (with signs) or translations of a domain."""
    bc = BC.parse(bc)
    if isinstance(domain, Lattice):
        vs = domain.neighbor_translations()
        isos = [Isometry(np.eye(domain.dim), v) for v in vs]
        return isos, np.ones(len(isos))
    key = (domain.kind, domain.parameters, "refl")
    if key not in _NEIGHBOR_CACHE:
        grp = reflection_group(domain, 0.0)
        _NEIGHBOR_CACHE[key] = grp.neighbors
    isos = _NEIGHBOR_CACHE[key]
    if bc == BC.DIRICHLET:
        signs = np.array([float(el.sign) for el in isos])
    else:
        signs = np.ones(len(isos))
    return isos, signs


def s_ctm(domain, bc, lam: float, r, rp, terms: bool = False):
    """Continuum spectral function; optionally the per-neighbor terms."""
    bc = BC.parse(bc)
    r_arr = np.atleast_2d(np.asarray(r, dtype=float))
    rp_arr = np.atleast_2d(np.asarray(rp, dtype=float))
    scalar = np.asarray(r).ndim == 1
    n = domain.dim
    pref = omega(n) / (2.0 * math.pi) ** n * lam ** n
    isos, signs = neighbor_isometries(domain, bc)
    total = np.zeros(r_arr.shape[0])
    term_map = {}
    for iso, sign in zip(isos, signs):
        dist = np.linalg.norm(r_arr - iso.apply(rp_arr), axis=1)
        term = sign * pref * h(n, lam * dist)
        total += term
        if terms:
            term_map[iso.word] = float(term[0]) if scalar else term
    if scalar:
        total = float(total[0])
    return (total, term_map) if terms else total


def s_ctm_scaled_diag(domain, bc, lam: float, x):
    """Scaled continuum diagonal and gradient at unscaled points x.

    Returns (lam^{-n} S^ctm(x,x), lam^{-n-1} d/dx S^ctm(x,x)); the
    neighbor sum telescopes into h terms at lam |x - sigma x|.
    """
    bc = BC.parse(bc)
    x_arr = np.atleast_2d(np.asarray(x, dtype=float))
    n = domain.dim
    pref = omega(n) / (2.0 * math.pi) ** n
    isos, signs = neighbor_isometries(domain, bc)
    dens = np.zeros(x_arr.shape[0])
    grad = np.zeros_like(x_arr)
    eye = np.eye(n)
    for iso, sign in zip(isos, signs):
        img = iso.apply(x_arr)
        diff = x_arr - img
        dist = np.linalg.norm(diff, axis=1)
        dens += sign * pref * h(n, lam * dist)
        pos = dist > 0
        if pos.any():
            # d/dx |x - sigma x| = (I - Q^T) applied to the unit difference
            unit = diff[pos] / dist[pos, None]
            direction = unit - unit @ iso.q
            grad[pos] += (sign * pref * hdot(n, lam * dist[pos]))[:, None] * direction
    return dens, grad


# ---------------------------------------------------------------------------
# counting and scans


def counting(enum: SpectrumEnumeration, lam) -> int | np.ndarray:
    return enum.counting(lam)


def weyl_residual(enum: SpectrumEnumeration, lam) -> np.ndarray | float:
    """(N(lam) - bulk term) / lam^{n-1}."""
    n = enum.dim
    vol = enum.domain.volume
    nat = enum.counting(lam)
    lam_arr = np.asarray(lam, dtype=float)
    bulk = omega(n) / (2.0 * math.pi) ** n * lam_arr ** n * vol
    return (nat - bulk) / lam_arr ** (n - 1)


def weyl_surface_prediction(domain, bc) -> float:
    """The window-average the two-term law predicts for the residual."""
    bc = BC.parse(bc)
    if isinstance(domain, Lattice):
        return 0.0
    n = domain.dim
    mag = omega(n - 1) * domain.boundary_area / (4.0 * (2.0 * math.pi) ** (n - 1))
    return -mag if bc == BC.DIRICHLET else mag


def _sample_domain_points(domain, count: int, seed: int, dim_offset: int = 0):
    """Low-discrepancy point pairs in the domain (rejection inside bbox)."""
    from scipy.stats import qmc as _q
    poly = domain.fundamental_domain() if isinstance(domain, Lattice) else domain
    lo, hi = poly.bounding_box()
    n = poly.dim
    kept = []
    have = 0
    for attempt in range(8):
        eng = _q.Sobol(2 * n, scramble=True, seed=seed + dim_offset + 1000 * attempt)
        u = eng.random_base2(int(math.ceil(math.log2(max(count, 2)))) + 2)
        cand_r = lo + u[:, :n] * (hi - lo)
        cand_p = lo + u[:, n:] * (hi - lo)
        ok = poly.contains(cand_r) & poly.contains(cand_p)
        kept.append(np.concatenate([cand_r[ok], cand_p[ok]], axis=1))
        have += int(ok.sum())
        if have >= count:
            break
    allpts = np.concatenate(kept, axis=0)[:count]
    return allpts[:, :n], allpts[:, n:]


def error_scan(enum: SpectrumEnumeration, domain, bc, lam_grid,
               n_samples: int = 2 ** 14, p: float = 4.0,
               seed: int = 7) -> list[dict]:
    """Sampled L-infinity / L2 / Lp errors of S - S_ctm per lambda.

    One basis evaluation at the sample pairs serves the whole grid: the
    per-mode products are cumulatively summed so each cutoff is a prefix.
    Returns one record per lambda with the running log-log slope.
    """
    lam_grid = np.asarray(lam_grid, dtype=float)
    if lam_grid.size == 0:
        raise ValueError("empty lambda grid")
    bc = BC.parse(bc)
    r, rp = _sample_domain_points(domain, n_samples, seed)
    rd, _ = _sample_domain_points(domain, n_samples // 4, seed, dim_offset=13)

    if isinstance(domain, Lattice):
        vol = domain.volume
    else:
        vol = domain.volume

    # mode-product matrices, cumulative over the sorted modes
    cum_off = _cumulative_pair_products(enum, r, rp)
    cum_diag = _cumulative_pair_products(enum, rd, rd)

    records = []
    lvals, evals = [], []
    for lam in lam_grid:
        nm = enum.counting(lam)
        s_off = cum_off[:, nm - 1] if nm > 0 else np.zeros(len(r))
        s_diag = cum_diag[:, nm - 1] if nm > 0 else np.zeros(len(rd))
        ctm_off = s_ctm(domain, bc, lam, r, rp)
        ctm_diag = s_ctm(domain, bc, lam, rd, rd)
        diff_off = s_off - ctm_off
        diff_diag = s_diag - ctm_diag
        linf_off = float(np.abs(diff_off).max())
        linf_diag = float(np.abs(diff_diag).max())
        l2 = float(math.sqrt(np.mean(diff_off ** 2) * vol ** 2))
        lp = float(np.mean(np.abs(diff_off) ** p * vol ** 2) ** (1.0 / p))
        err = max(linf_off, linf_diag)
        lvals.append(math.log(lam))
        evals.append(math.log(max(err, 1e-300)))
        slope = float("nan")
        if len(lvals) >= 2:
            slope = float(np.polyfit(lvals, evals, 1)[0])
        records.append({
            "lambda": float(lam), "n_modes": int(nm),
            "linf": err, "linf_diag": linf_diag, "linf_offdiag": linf_off,
            "l2": l2, "lp": lp, "slope_to_date": slope,
        })
    return records


def _cumulative_pair_products(enum: SpectrumEnumeration, r, rp) -> np.ndarray:
    """Matrix C with C[p, j] = sum_{i <= j} e_i(r_p) e_i(r'_p)."""
    d = enum._d
    if enum.kind == "box":
        er = kernels.basis_matrix(d["base"], d["m_idx"], d["amps"], d["trig"], r)
        ep = kernels.basis_matrix(d["base"], d["m_idx"], d["amps"], d["trig"], rp)
        return np.cumsum(er * ep, axis=1)
    if enum.kind == "triangle":
        sq = d["square"]
        sd = sq._d
        er = kernels.basis_matrix(sd["base"], sd["m_idx"], sd["amps"], sd["trig"], r)
        ep = kernels.basis_matrix(sd["base"], sd["m_idx"], sd["amps"], sd["trig"], rp)
        et = kernels.basis_matrix(sd["base"], sd["m_idx"], sd["amps"], sd["trig"], rp[:, ::-1])
        sgn = -1.0 if enum.bc == BC.DIRICHLET else 1.0
        prod = er * ep + sgn * er * et
        # square modes sorted by the same eigenvalues; map to triangle order
        csq = np.cumsum(prod, axis=1)
        idx = sq.counting(enum.lams) - 1
        return csq[:, idx]
    phase = (r - rp) @ d["kvecs"].T
    prod = np.cos(phase) * d["weights"] / d["volume"]
    csum = np.cumsum(prod, axis=1)
    idx = d["half_count"][1:len(enum.lams) + 1] - 1
    out = np.where(idx[None, :] >= 0, csum[:, np.maximum(idx, 0)], 0.0)
    return out


def slope_fit(lams, errors) -> float:
    """Least-squares slope of log(error) against log(lambda)."""
    x = np.log(np.asarray(lams, dtype=float))
    y = np.log(np.maximum(np.asarray(errors, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# generalized Poisson summation check


def poisson_check(enum: SpectrumEnumeration, domain, bc, width: float,
                  r, rp) -> dict:
    """Gaussian test of the eigenfunction/reflection summation identity.

    Left side sums f(lam_j) e_j(r) e_j(r') with f(t) = exp(-(t/width)^2);
    right side sums the n-dimensional Gaussian transform over group
    elements, truncated where its tail drops below 1e-14.
    """
    bc = BC.parse(bc)
    a = float(width)
    n = domain.dim
    # spectral tail bound: modes beyond lam_max contribute < 1e-12
    need = a * math.sqrt(-math.log(1e-16))
    if enum.lam_max < need:
        raise ValueError(f"enumeration cutoff {enum.lam_max} too small; "
                         f"need at least {need:.2f} for the tail bound")
    lhs = float(enum.weighted_sum(lambda t: np.exp(-(t / a) ** 2), r, rp)[0])

    # geometric cutoff: (a sqrt(pi))^n exp(-a^2 R^2/4) * count < 1e-14
    r_cut = 2.0 / a * math.sqrt(max(math.log((a * math.sqrt(math.pi)) ** n * 1e16), 1.0)) + 2.0

    def transform(dist):
        return (a * math.sqrt(math.pi)) ** n * np.exp(-(a ** 2) * dist ** 2 / 4.0)

    r_arr = np.asarray(r, dtype=float)
    rp_arr = np.asarray(rp, dtype=float)
    rhs = 0.0
    if isinstance(domain, Lattice):
        # enough shells of lattice translates to cover the cutoff
        reach = int(math.ceil(r_cut / min(np.linalg.norm(b) for b in domain.basis))) + 2
        import itertools as _it
        coeffs = np.array(list(_it.product(range(-reach, reach + 1), repeat=n)), dtype=float)
        vs = coeffs @ domain.basis
        dist = np.linalg.norm(r_arr - rp_arr - vs, axis=1)
        rhs = float(np.sum(transform(dist)) / (2.0 * math.pi) ** n)
    else:
        grp = reflection_group(domain, r_cut + domain.diameter)
        for el in grp.elements:
            dist = float(np.linalg.norm(r_arr - el.apply(rp_arr)))
            sign = float(el.sign) if bc == BC.DIRICHLET else 1.0
            rhs += sign * float(transform(np.array([dist]))[0])
        rhs /= (2.0 * math.pi) ** n
    return {"lhs": lhs, "rhs": rhs, "abs_diff": abs(lhs - rhs)}
