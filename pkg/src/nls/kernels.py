"""Reference Levy measures, jumping kernels, and their integrals.

A reference measure nu lives on the punctured unit ball, is symmetric
(nu(A) = nu(-A)) and has a finite second moment.  Every shipped variant
decomposes into "parts": a set of directions with angular weights and a
radial density r^(-1-alpha) on a union of radial segments, so that

    int g dnu  =  sum_parts sum_dirs w_dir * int g(r * dir) rho(r) dr.

Continuous angular variants (isotropic, cone, dyadic shells) refine both
the angular rule and the radial rule; genuinely lower-dimensional
variants (axis, spherical atoms, product of stables) keep their exact
atom directions and refine only radially.

The radial quadrature near 0 substitutes u = r^(2-alpha), which removes
the integrable singularity of |z|^2 nu(dz); integrands are assumed
O(|z|^2) at the origin (the caller's contract).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from .errors import (
    CutoffTooSmall,
    DimensionMismatch,
    NonIntegrable,
    ToleranceNotMet,
    UnsupportedKernel,
)

VARIANTS = (
    "isotropic_stable",
    "cone",
    "dyadic_shell",
    "axis",
    "product_stable",
    "spherical",
)

_FULL_RANGE = math.inf


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero direction vector")
    return v / n


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Symmetric reference measure on the punctured unit ball.

    Parameters are variant-specific; unused ones stay None.  All stability
    indices must lie in (0, 2).  Spherical atom lists must already be
    symmetric: for every (direction, mass) the antipode with equal mass
    must be present (checked at construction).
    """

    d: int
    variant: str
    alpha: float | None = None
    axis: tuple | None = None          # cone: unit vector
    half_angle: float | None = None    # cone: radians in (0, pi/2]
    alphas: tuple | None = None        # axis variant: per-coordinate index
    d1: int | None = None              # product_stable
    d2: int | None = None
    alpha1: float | None = None
    alpha2: float | None = None
    atoms: tuple | None = None         # spherical: ((dir tuple, mass), ...)
    mc_seed: int = 20240901            # cone fallback in d >= 4

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.d < 1:
            raise ValueError("dimension must be positive")
        for a in self._all_alphas():
            if not (0.0 < a < 2.0):
                raise ValueError(f"stability index {a} outside (0, 2)")
        if self.variant == "cone":
            if self.d < 2:
                raise ValueError("cone variant needs d >= 2")
            if self.axis is None or self.half_angle is None:
                raise ValueError("cone needs axis and half_angle")
            if not (0.0 < self.half_angle <= math.pi / 2):
                raise ValueError("half_angle must lie in (0, pi/2]")
            a = _unit(self.axis)
            object.__setattr__(self, "axis", tuple(float(x) for x in a))
        if self.variant == "axis":
            alphas = self.alphas
            if alphas is None and self.alpha is not None:
                alphas = (self.alpha,) * self.d
            if alphas is None or len(alphas) != self.d:
                raise ValueError("axis variant needs one alpha per axis")
            object.__setattr__(self, "alphas", tuple(float(a) for a in alphas))
        if self.variant == "product_stable":
            if None in (self.d1, self.d2, self.alpha1, self.alpha2):
                raise ValueError("product_stable needs d1, d2, alpha1, alpha2")
            if self.d1 + self.d2 != self.d:
                raise ValueError("d1 + d2 must equal d")
        if self.variant == "spherical":
            if not self.atoms:
                raise ValueError("spherical variant needs atoms")
            atoms = tuple(
                (tuple(float(x) for x in _unit(dirn)), float(mass))
                for dirn, mass in self.atoms
            )
            object.__setattr__(self, "atoms", atoms)
            _check_atom_symmetry(atoms)
        if self.variant in ("isotropic_stable", "dyadic_shell", "spherical"):
            if self.alpha is None:
                raise ValueError(f"{self.variant} needs alpha")
        if self.variant == "cone" and self.alpha is None:
            raise ValueError("cone needs alpha")

    def _all_alphas(self):
        out = []
        if self.alpha is not None:
            out.append(self.alpha)
        if self.alphas:
            out.extend(self.alphas)
        for a in (self.alpha1, self.alpha2):
            if a is not None:
                out.append(a)
        return out

    @property
    def min_alpha(self):
        return min(self._all_alphas())

    @property
    def max_alpha(self):
        return max(self._all_alphas())

    def label(self):
        if self.variant == "isotropic_stable":
            return f"isotropic_stable(d={self.d},alpha={self.alpha})"
        if self.variant == "cone":
            return f"cone(d={self.d},alpha={self.alpha},half_angle={self.half_angle})"
        if self.variant == "dyadic_shell":
            return f"dyadic_shell(d={self.d},alpha={self.alpha})"
        if self.variant == "axis":
            return f"axis(d={self.d},alphas={self.alphas})"
        if self.variant == "product_stable":
            return (f"product_stable(d1={self.d1},d2={self.d2},"
                    f"alpha1={self.alpha1},alpha2={self.alpha2})")
        return f"spherical(d={self.d},alpha={self.alpha},atoms={len(self.atoms)})"


def _check_atom_symmetry(atoms, tol=1e-12):
    dirs = np.array([a[0] for a in atoms])
    masses = np.array([a[1] for a in atoms])
    for i in range(len(atoms)):
        diff = np.linalg.norm(dirs + dirs[i], axis=1)
        j = int(np.argmin(diff))
        if diff[j] > tol or abs(masses[j] - masses[i]) > tol * max(1.0, masses[i]):
            raise ValueError(
                "spherical atom list is not symmetric: missing antipode of "
                f"atom {i} with equal mass"
            )


@dataclass(frozen=True)
class JumpKernelSpec:
    """Translation-invariant jumping kernel J(x, dy) = J0(d(y - x)).

    Mirrors the measure variants but is defined on all of R^d with a
    truncation radius of either 1 (finite range) or infinity.  The dyadic
    shell kernel is finite range by construction (all shells sit inside
    the unit ball).
    """

    measure: LevyMeasureSpec
    truncation: float = 1.0

    def __post_init__(self):
        if not (self.truncation == 1.0 or math.isinf(self.truncation)):
            raise ValueError("truncation radius must be 1 or inf")

    @property
    def d(self):
        return self.measure.d

    @property
    def variant(self):
        return self.measure.variant

    @property
    def min_alpha(self):
        return self.measure.min_alpha

    def label(self):
        t = "inf" if math.isinf(self.truncation) else f"{self.truncation:g}"
        return f"J[{self.measure.label()},trunc={t}]"

    def is_absolutely_continuous(self):
        return self.variant in ("isotropic_stable", "cone", "dyadic_shell")

    def restrict_to_unit_ball(self):
        """The natural reference measure: J0 restricted to B(0,1)."""
        return self.measure

    def density(self, Z):
        """Density of J0 with respect to Lebesgue measure at points Z (m, d).

        Only defined for absolutely continuous variants; zero outside the
        support (truncation ball, cone, shells).
        """
        if not self.is_absolutely_continuous():
            raise UnsupportedKernel(
                f"{self.variant} kernel is singular w.r.t. Lebesgue measure")
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        r = np.linalg.norm(Z, axis=1)
        m = self.measure
        out = np.zeros(len(Z))
        mask = (r > 0) & (r < self.truncation)
        if self.variant == "dyadic_shell":
            mask &= _in_dyadic_shell(r)
        if self.variant == "cone":
            a = np.asarray(m.axis)
            with np.errstate(invalid="ignore"):
                cosang = np.abs(Z @ a) / np.where(r > 0, r, 1.0)
            mask &= cosang >= math.cos(m.half_angle) - 1e-15
        out[mask] = r[mask] ** (-(m.d + m.alpha))
        return out


def _in_dyadic_shell(r):
    """Indicator of union_n [2^-(2n+1), 2^-2n), the kept dyadic shells."""
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape, dtype=bool)
    pos = (r > 0) & (r < 1.0)
    k = np.zeros(r.shape)
    k[pos] = np.floor(-np.log2(r[pos]))  # r in [2^-(k+1), 2^-k)
    out[pos] = (k[pos] % 2) == 0
    return out


def _dyadic_shells(alpha, n_shells):
    """Radial segments [2^-(2n+1), 2^-2n) for n = 0..n_shells-1."""
    return [(2.0 ** -(2 * n + 1), 2.0 ** -(2 * n)) for n in range(n_shells)]


# ----------------------------------------------------------------------
# quadrature rules
# ----------------------------------------------------------------------

def _gl_panels(a, b, edges_inside, n_nodes):
    """Composite Gauss-Legendre nodes/weights on [a, b] split at edges."""
    pts = [a] + [e for e in edges_inside if a < e < b] + [b]
    x0, w0 = leggauss(n_nodes)
    xs, ws = [], []
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        xs.append(mid + half * x0)
        ws.append(half * w0)
    return np.concatenate(xs), np.concatenate(ws)


def _radial_rule_singular(alpha, r_hi, level):
    """Nodes/weights for int_0^{r_hi} f(r) r^(-1-alpha) dr, f = O(r^2).

    Substitutes u = r^(2-alpha) and grades panels geometrically toward
    u = 0; the transformed integrand is bounded there for admissible f.
    """
    p = 2.0 - alpha
    u_hi = r_hi ** p
    n_geo = 12 + 2 * level
    edges = [u_hi * 2.0 ** (-k) for k in range(n_geo, 0, -1)]
    u, wu = _gl_panels(0.0, u_hi, edges, 8)
    r = u ** (1.0 / p)
    w = wu * u ** (-2.0 / p) / p
    return r, w


def _radial_rule_smooth(alpha, r_lo, r_hi, level):
    """Nodes/weights for int f(r) r^(-1-alpha) dr on [r_lo, r_hi], r_lo > 0."""
    n_geo = max(1, int(math.ceil(math.log2(r_hi / r_lo))))
    edges = [r_lo * 2.0 ** k for k in range(1, n_geo)]
    nodes = 8 + 4 * level
    r, wr = _gl_panels(r_lo, r_hi, edges, nodes)
    return r, wr * r ** (-1.0 - alpha)


def _radial_rule_tail(alpha, r_split, decay_gap, level):
    """Nodes/weights for int_{r_split}^inf f(r) r^(-1-alpha) dr.

    f may grow like r^q with q = alpha - decay_gap; the substitution
    v = (r / r_split)^(-decay_gap) maps the tail to (0, 1] with a bounded
    integrand.
    """
    s = decay_gap
    if s <= 0:
        raise ValueError("tail needs alpha - growth > 0")
    nodes = 16 + 8 * level
    v, wv = _gl_panels(0.0, 1.0, [2.0 ** -k for k in range(8, 0, -1)], nodes)
    r = r_split * v ** (-1.0 / s)
    w = (r_split ** (-alpha) / s) * v ** (alpha / s - 1.0) * wv
    return r, w


def _circle_dirs(n_half):
    """2n directions on S^1, exactly antipode-paired."""
    ang = (np.arange(n_half) + 0.5) * (math.pi / n_half)
    half = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    dirs = np.concatenate([half, -half])
    wts = np.full(2 * n_half, math.pi / n_half)
    return dirs, wts


def _sphere_dirs(n_polar):
    """Product rule on S^2 (GL in cos(theta) x trapezoid), antipode-paired."""
    mu, wmu = leggauss(n_polar)
    n_az = 2 * n_polar
    phi = (np.arange(n_az) + 0.5) * (2 * math.pi / n_az)
    MU, PHI = np.meshgrid(mu, phi, indexing="ij")
    s = np.sqrt(1.0 - MU ** 2)
    dirs = np.stack([s * np.cos(PHI), s * np.sin(PHI), MU], axis=-1).reshape(-1, 3)
    wts = np.repeat(wmu, n_az) * (2 * math.pi / n_az)
    return dirs, wts


def _orthonormal_complement(a):
    d = len(a)
    basis = []
    for e in np.eye(d):
        v = e - (e @ a) * a
        for b in basis:
            v = v - (v @ b) * b
        n = np.linalg.norm(v)
        if n > 1e-10:
            basis.append(v / n)
    return basis


def _cap_dirs(axis, beta, d, level, mc_seed):
    """Directions/weights covering both spherical caps of a symmetric cone."""
    a = np.asarray(axis, dtype=float)
    if d == 2:
        n = 16 * 2 ** level
        t, wt = _gl_panels(-beta, beta, [], 8)
        ts = np.concatenate([t] * 1)
        perp = _orthonormal_complement(a)[0]
        half = np.outer(np.cos(ts), a) + np.outer(np.sin(ts), perp)
        dirs = np.concatenate([half, -half])
        wts = np.concatenate([wt, wt])
        return dirs, wts
    if d == 3:
        # surface measure: d(sigma) = d(cos t) d(psi) about the axis
        n_u = 8 + 4 * level
        u, wu = _gl_panels(math.cos(beta), 1.0, [], n_u)
        n_az = 16 + 8 * level
        psi = (np.arange(n_az) + 0.5) * (2 * math.pi / n_az)
        e1, e2 = _orthonormal_complement(a)[:2]
        s = np.sqrt(np.clip(1.0 - u ** 2, 0.0, None))
        half = (u[:, None, None] * a[None, None, :]
                + s[:, None, None] * (np.cos(psi)[None, :, None] * e1
                                      + np.sin(psi)[None, :, None] * e2))
        half = half.reshape(-1, 3)
        wts_half = np.repeat(wu, n_az) * (2 * math.pi / n_az)
        dirs = np.concatenate([half, -half])
        wts = np.concatenate([wts_half, wts_half])
        return dirs, wts
    # d >= 4: deterministic Monte Carlo on the cap (fixed seed)
    rng = np.random.default_rng(mc_seed)
    n_mc = 4096 * 2 ** level
    raw = rng.standard_normal((n_mc, d))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    cosang = raw @ a
    keep = raw[np.abs(cosang) >= math.cos(beta)]
    frac = len(keep) / n_mc
    area = _sphere_area(d) * frac
    half = keep
    dirs = np.concatenate([half, -half])
    wts = np.full(2 * len(half), area / (2 * len(half)))
    return dirs, wts


def _sphere_area(d):
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def _iso_dirs(d, level):
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        return _circle_dirs(16 * 2 ** level)
    if d == 3:
        return _sphere_dirs(8 * 2 ** level)
    raise UnsupportedKernel(
        f"continuous angular quadrature not implemented for d={d}")


def _n_dyadic_shells(alpha, level):
    # shell n contributes ~ 4^(-n(2-alpha)) to second-moment integrands
    base = int(math.ceil(30.0 / (2.0 - alpha)))
    return min(3000, base + 10 * level)


def _embed(dirs, d, offset):
    out = np.zeros((len(dirs), d))
    out[:, offset:offset + dirs.shape[1]] = dirs
    return out


def _measure_parts(spec, level):
    """List of (dirs (A,d), weights (A,), alpha, segments) for nu."""
    v = spec.variant
    if v == "isotropic_stable":
        dirs, wts = _iso_dirs(spec.d, level)
        return [(dirs, wts, spec.alpha, ((0.0, 1.0),))]
    if v == "cone":
        dirs, wts = _cap_dirs(spec.axis, spec.half_angle, spec.d, level,
                              spec.mc_seed)
        return [(dirs, wts, spec.alpha, ((0.0, 1.0),))]
    if v == "dyadic_shell":
        dirs, wts = _iso_dirs(spec.d, level)
        segs = tuple(_dyadic_shells(spec.alpha, _n_dyadic_shells(spec.alpha, level)))
        return [(dirs, wts, spec.alpha, segs)]
    if v == "axis":
        parts = []
        eye = np.eye(spec.d)
        for i, a in enumerate(spec.alphas):
            dirs = np.stack([eye[i], -eye[i]])
            parts.append((dirs, np.array([1.0, 1.0]), a, ((0.0, 1.0),)))
        return parts
    if v == "spherical":
        dirs = np.array([a[0] for a in spec.atoms])
        wts = np.array([a[1] for a in spec.atoms])
        return [(dirs, wts, spec.alpha, ((0.0, 1.0),))]
    if v == "product_stable":
        parts = []
        d1, d2 = spec.d1, spec.d2
        dirs1, w1 = _iso_dirs(d1, level)
        parts.append((_embed(dirs1, spec.d, 0), w1, spec.alpha1, ((0.0, 1.0),)))
        dirs2, w2 = _iso_dirs(d2, level)
        parts.append((_embed(dirs2, spec.d, d1), w2, spec.alpha2, ((0.0, 1.0),)))
        return parts
    raise UnsupportedKernel(v)


@lru_cache(maxsize=256)
def _measure_rule(spec, level):
    """Quadrature nodes Z (Q,d) and weights w for nu; sum w g(Z) ~ int g dnu."""
    zs, ws = [], []
    for dirs, dwts, alpha, segments in _measure_parts(spec, level):
        rr, wr = [], []
        for lo, hi in segments:
            if lo == 0.0:
                r, w = _radial_rule_singular(alpha, hi, level)
            else:
                r, w = _radial_rule_smooth(alpha, lo, hi, level)
            rr.append(r)
            wr.append(w)
        r = np.concatenate(rr)
        w = np.concatenate(wr)
        zs.append(r[:, None, None] * dirs[None, :, :])
        ws.append(w[:, None] * dwts[None, :])
    Z = np.concatenate([z.reshape(-1, spec.d) for z in zs])
    W = np.concatenate([w.ravel() for w in ws])
    return Z, W


@lru_cache(maxsize=256)
def kernel_rule(kernel, r_outer, level, growth=0.0):
    """Quadrature rule for the full jumping measure J0 out to infinity.

    ``r_outer`` marks where the smooth mid-range panels stop; beyond it a
    power-law tail substitution takes over assuming the integrand grows no
    faster than r^growth (requires growth < alpha).  For finite-range
    kernels the rule is just the unit-ball rule.
    """
    spec = kernel.measure
    if not math.isinf(kernel.truncation):
        return _measure_rule(spec, level)
    zs, ws = [], []
    for dirs, dwts, alpha, segments in _measure_parts(spec, level):
        rr, wr = [], []
        for lo, hi in segments:
            if lo == 0.0:
                r, w = _radial_rule_singular(alpha, hi, level)
            else:
                r, w = _radial_rule_smooth(alpha, lo, hi, level)
            rr.append(r)
            wr.append(w)
        r_split = max(2.0 * r_outer, 2.0)
        r, w = _radial_rule_smooth(alpha, 1.0, r_split, level)
        rr.append(r)
        wr.append(w)
        gap = alpha - growth
        r, w = _radial_rule_tail(alpha, r_split, gap, level)
        rr.append(r)
        wr.append(w)
        r = np.concatenate(rr)
        w = np.concatenate(wr)
        zs.append(r[:, None, None] * dirs[None, :, :])
        ws.append(w[:, None] * dwts[None, :])
    Z = np.concatenate([z.reshape(-1, spec.d) for z in zs])
    W = np.concatenate([w.ravel() for w in ws])
    return Z, W


# ----------------------------------------------------------------------
# integrals against nu
# ----------------------------------------------------------------------

_MAX_LEVEL = 5


def nu_integral_multi(g, spec, tol=1e-8, max_level=_MAX_LEVEL):
    """Integrate a vector-valued g: (Q, d) -> (Q, m) against nu.

    Refines the shared rule until every component is stable to the
    relative tolerance; raises NonIntegrable when successive refinements
    diverge (integrand not O(|z|^2) at the origin) and ToleranceNotMet
    when the refinement budget runs out.
    """
    prev = prev_delta = None
    for level in range(max_level + 1):
        Z, w = _measure_rule(spec, level)
        vals = np.atleast_2d(np.asarray(g(Z), dtype=float).T).T
        if vals.shape[0] != len(Z):
            raise DimensionMismatch("integrand returned wrong shape")
        cur = w @ vals
        cur_abs = np.abs(w) @ np.abs(vals)
        if prev is not None:
            delta = np.abs(cur - prev)
            # components that cancel to ~0 are judged against a small
            # fraction of the absolute mass instead of their own size
            scale = np.maximum(np.abs(cur), 1e-3 * cur_abs + 1e-300)
            if np.all(delta <= tol * scale):
                return cur
            if prev_delta is not None:
                growing = delta > 1.4 * np.maximum(prev_delta, 1e-300)
                big = delta > 1e3 * tol * scale
                if np.any(growing & big):
                    raise NonIntegrable(
                        "refinement diverges near the origin; integrand is "
                        "not O(|z|^2)")
            prev_delta = delta
        prev = cur
    raise ToleranceNotMet(
        f"nu integral not converged to rel {tol} within {max_level} refinements")


def nu_integral(g, spec, tol=1e-8, max_level=_MAX_LEVEL):
    """int g dnu for scalar g, within relative tolerance tol."""
    out = nu_integral_multi(lambda Z: np.asarray(g(Z))[:, None], spec, tol,
                            max_level)
    return float(out[0])


@dataclass(frozen=True)
class MomentSet:
    """Second/fourth moments of nu and the quadratic moment matrix.

    gamma0 = int |z|^2 nu(dz), c1_fourth = int |z|^4 nu(dz), and
    Q_ij = int z_i z_j nu(dz); F(x) = <x, Qx>/|x|^2 takes values in
    (0, gamma0] for nondegenerate measures.
    """

    gamma0: float
    c1_fourth: float
    Q: np.ndarray

    def F(self, x):
        x = np.asarray(x, dtype=float)
        n2 = float(x @ x)
        if n2 == 0.0:
            raise ZeroDivisionError("F(x) undefined at x = 0")
        return float(x @ self.Q @ x) / n2

    @property
    def min_eig(self):
        return float(np.linalg.eigvalsh(self.Q)[0])

    @property
    def near_degenerate(self):
        """Flag (not reject) measures whose moment matrix is numerically
        rank-deficient; threshold 1e-10 relative to the trace."""
        return self.min_eig < 1e-10 * max(self.gamma0, 1e-300)


def moments(spec, tol=1e-9):
    """Compute the MomentSet of nu with a single shared quadrature.

    All entries converge on the same rule, so trace(Q) matches gamma0 to
    rounding.
    """
    d = spec.d
    idx = [(i, j) for i in range(d) for j in range(i, d)]

    def g(Z):
        r2 = np.sum(Z ** 2, axis=1)
        cols = [r2, r2 ** 2]
        cols.extend(Z[:, i] * Z[:, j] for i, j in idx)
        return np.stack(cols, axis=1)

    vals = nu_integral_multi(g, spec, tol=tol)
    gamma0, c1 = float(vals[0]), float(vals[1])
    Q = np.zeros((d, d))
    for (i, j), v in zip(idx, vals[2:]):
        Q[i, j] = Q[j, i] = v
    Q = 0.5 * (Q + Q.T)
    return MomentSet(gamma0=gamma0, c1_fourth=c1, Q=Q)


# ----------------------------------------------------------------------
# characteristic exponent and beta_0
# ----------------------------------------------------------------------

def char_exponent(xi, spec, tol=1e-8):
    """phi(xi) = int_{|z|<1} (1 - cos <z, xi>) nu(dz), nonnegative and even."""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if len(xi) != spec.d:
        raise DimensionMismatch(f"xi has length {len(xi)}, spec.d = {spec.d}")
    return float(char_exponent_batch(xi[None, :], spec, tol)[0])


_OSC_SWITCH = 64.0


@lru_cache(maxsize=64)
def _osc_rule(alpha, level):
    """Rule for int_0^1 f(r) r^(-1-alpha) dr resolving f = cos(w r), w <= 64.

    Geometric panels graded toward 0 (u = r^(2-alpha) substitution) plus
    uniform panels of width ~ pi/2^(1+level) across (0, 1].
    """
    r0, w0 = _radial_rule_singular(alpha, 2.0 ** -6, level)
    width = math.pi / 2 ** (1 + level)
    n_pan = int(math.ceil((1.0 - 2.0 ** -6) * _OSC_SWITCH / width))
    edges = list(np.linspace(2.0 ** -6, 1.0, n_pan + 1))
    r1, w1 = _gl_panels(2.0 ** -6, 1.0, edges[1:-1], 8)
    w1 = w1 * r1 ** (-1.0 - alpha)
    return np.concatenate([r0, r1]), np.concatenate([w0, w1])


def _G_inf(alpha):
    """int_0^inf (1 - cos u) u^(-1-alpha) du; removable singularity at alpha=1."""
    if abs(alpha - 1.0) < 1e-7:
        return math.pi / 2
    return math.cos(math.pi * alpha / 2) * math.gamma(2.0 - alpha) \
        / (alpha * (1.0 - alpha))


def _tail_one_minus_cos(w, alpha):
    """T(w) = int_w^inf (1 - cos u) u^(-1-alpha) du for w > _OSC_SWITCH.

    T(w) = w^(-alpha)/alpha - C(w) with C(w) = int_w^inf cos(u) u^(-1-alpha) du
    expanded by repeated integration by parts (six terms; the remainder is
    O(w^(-7-alpha)) which is below 1e-9 relative at w >= 64).
    """
    w = np.asarray(w, dtype=float)
    sin_w, cos_w = np.sin(w), np.cos(w)
    c = np.zeros_like(w)
    coef = 1.0
    power = w ** (-1.0 - alpha)
    for k in range(6):
        # C(w) = -sin(w)/w^(1+a) + (1+a)cos(w)/w^(2+a)
        #        + (1+a)(2+a)sin(w)/w^(3+a) - ... (signs -++- periodic)
        term = coef * power * (sin_w if k % 2 == 0 else cos_w)
        c += term if k % 4 in (1, 2) else -term
        coef *= (k + 1) + alpha
        power = power / w
    return w ** -alpha / alpha - c


def _G_one_minus_cos(w, alpha, level):
    """G(w) = int_0^w (1 - cos u) u^(-1-alpha) du, vectorized in w >= 0."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    small = (w > 0) & (w <= _OSC_SWITCH)
    large = w > _OSC_SWITCH
    if np.any(small):
        # substitute u = w r: G(w) = w^(-alpha) int_0^1 (1 - cos(w r)) r^(-1-alpha) dr
        r, wr = _osc_rule(alpha, level)
        ws = w[small]
        out[small] = ws ** -alpha * ((1.0 - np.cos(np.outer(ws, r))) @ wr)
    if np.any(large):
        out[large] = _G_inf(alpha) - _tail_one_minus_cos(w[large], alpha)
    return out


def char_exponent_batch(XI, spec, tol=1e-8, max_level=3):
    """phi on a batch of frequencies XI (m, d).

    Reduces every variant to 1-D radial integrals of (1 - cos(s r))
    against r^(-1-alpha) dr per angular node, evaluated through G above;
    accuracy is checked by comparing two rule levels.
    """
    XI = np.atleast_2d(np.asarray(XI, dtype=float))
    prev = None
    for level in range(max_level + 1):
        cur = _phi_eval(XI, spec, level)
        if prev is not None:
            scale = np.maximum(np.abs(cur), 1e-12 * max(1.0, float(cur.max())))
            if np.all(np.abs(cur - prev) <= tol * scale):
                return cur
        prev = cur
    raise ToleranceNotMet(f"char exponent batch not converged to rel {tol}")


def _segment_one_minus_cos(s, lo, hi, alpha, level):
    """int_lo^hi (1 - cos(s r)) r^(-1-alpha) dr, vectorized in s >= 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    if not np.any(pos):
        return out
    sp = s[pos]
    ghi = _G_one_minus_cos(sp * hi, alpha, level)
    glo = _G_one_minus_cos(sp * lo, alpha, level) if lo > 0 else 0.0
    # both endpoints deep in the tail: difference the tail directly to
    # avoid cancellation against G_inf
    both_tail = (sp * max(lo, 0.0) > _OSC_SWITCH)
    diff = ghi - glo
    if lo > 0 and np.any(both_tail):
        bt = both_tail
        diff[bt] = (_tail_one_minus_cos(sp[bt] * lo, alpha)
                    - _tail_one_minus_cos(sp[bt] * hi, alpha))
    out[pos] = sp ** alpha * diff
    return out


def _phi_eval(XI, spec, level):
    total = np.zeros(len(XI))
    for dirs, dwts, alpha, segments in _measure_parts(spec, min(level, 2)):
        S = np.abs(XI @ dirs.T)  # (m, A)
        contrib = np.zeros_like(S)
        for lo, hi in segments:
            contrib += _segment_one_minus_cos(S.ravel(), lo, hi, alpha,
                                              level).reshape(S.shape)
        total += contrib @ dwts
    return np.maximum(total, 0.0)


def _phi_is_radial(spec):
    return spec.variant in ("isotropic_stable", "dyadic_shell")


@lru_cache(maxsize=64)
def symbol_lower_bound(spec, lo=0.1, hi=100.0, n=48):
    """Fit c > 0 with phi(xi) >= c (|xi|^2 ^ |xi|^alpha) on a log-spaced window.

    Uses alpha = min over the spec's stability indices (the weakest decay
    direction); for anisotropic measures the minimum is also taken over a
    direction sample.  Returns (c, alpha_eff).
    """
    alpha = spec.min_alpha
    radii = np.exp(np.linspace(math.log(lo), math.log(hi), n))
    if spec.d == 1 or _phi_is_radial(spec):
        dirs = np.zeros((1, spec.d))
        dirs[0, 0] = 1.0
    else:
        if spec.d == 2:
            ang = np.linspace(0.0, math.pi, 16, endpoint=False)
            dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        else:
            rng = np.random.default_rng(12345)
            dirs = rng.standard_normal((24, spec.d))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        # make sure the slow axes are probed
        dirs = np.concatenate([dirs, np.eye(spec.d)])
    XI = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, spec.d)
    phi = char_exponent_batch(XI, spec, tol=1e-7)
    envelope = np.minimum(np.sum(XI ** 2, axis=1),
                          np.sum(XI ** 2, axis=1) ** (alpha / 2.0))
    c = float(np.min(phi / envelope))
    if c <= 0:
        raise NonIntegrable("fitted symbol lower bound is not positive")
    return c, alpha


@dataclass(frozen=True)
class BetaZeroResult:
    value: float
    tail_estimate: float
    cutoff: float

    def __float__(self):
        return self.value


def _tail_bound(R, r, c, alpha, d):
    """Upper bound for int_{|xi|>R} exp(-r c |xi|^alpha) dxi, R >= 1."""
    a = r * c
    k = d / alpha
    return (_sphere_area(d) / alpha) * a ** (-k) * math.gamma(k) \
        * float(special.gammaincc(k, a * R ** alpha))


def beta_zero(r, spec, xi_cutoff=None, tol=1e-6, max_level=_MAX_LEVEL):
    """beta_0(r) = int exp(-r phi(xi)) dxi, with a certified tail cut.

    The cutoff is grown automatically (via the fitted symbol lower bound)
    until the analytic tail bound drops below tolerance; an explicit
    xi_cutoff that fails the tail check raises CutoffTooSmall.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    c, alpha = symbol_lower_bound(spec)
    d = spec.d

    def integrate(R, level):
        edges = [1.0]
        while edges[-1] < R:
            edges.append(min(2.0 * edges[-1], R))
        nodes = 24 + 8 * level
        rho, wr = _gl_panels(0.0, 1.0, [], nodes)
        rhos, wrs = [rho], [wr]
        for lo, hi in zip(edges[:-1], edges[1:]):
            x, w = _gl_panels(lo, hi, [], nodes)
            rhos.append(x)
            wrs.append(w)
        rho = np.concatenate(rhos)
        wr = np.concatenate(wrs)
        if _phi_is_radial(spec) or d == 1:
            dirs = np.zeros((1, d))
            dirs[0, 0] = 1.0
            awts = np.array([_sphere_area(d) if d > 1 else 2.0])
        else:
            dirs, awts = _iso_dirs(d, min(level, 2))
        XI = (rho[:, None, None] * dirs[None, :, :]).reshape(-1, d)
        phi = char_exponent_batch(XI, spec, tol=min(1e-7, tol))
        vals = np.exp(-r * phi).reshape(len(rho), len(dirs))
        radial = vals @ awts
        if d > 1:
            radial = radial * rho ** (d - 1)
        return float(wr @ radial)

    if xi_cutoff is not None:
        R = float(xi_cutoff)
        val = integrate(R, 1)
        tail = _tail_bound(max(R, 1.0), r, c, alpha, d)
        if tail > tol * max(val, 1e-300):
            raise CutoffTooSmall(
                f"tail estimate {tail:.3e} exceeds tolerance at cutoff {R}")
    else:
        R = 4.0
        val = integrate(R, 0)
        while _tail_bound(R, r, c, alpha, d) > 0.25 * tol * max(val, 1e-300):
            R *= 2.0
            if R > 1e9:
                raise CutoffTooSmall("symbol bound too weak to certify a tail")
        val = integrate(R, 0)
    prev = val
    for level in range(1, max_level + 1):
        cur = integrate(R, level)
        if abs(cur - prev) <= tol * max(abs(cur), 1e-300):
            tail = _tail_bound(max(R, 1.0), r, c, alpha, d)
            return BetaZeroResult(value=cur + 0.0, tail_estimate=tail, cutoff=R)
        prev = cur
    raise ToleranceNotMet("beta_0 quadrature did not converge")


# ----------------------------------------------------------------------
# box measures and domination
# ----------------------------------------------------------------------

def _box_measure_ac(spec_d, alpha, density, lo, hi, level=2):
    nodes = 16 * 2 ** level
    axes = [_gl_panels(a, b, [], min(nodes, 48)) for a, b in zip(lo, hi)]
    grids = np.meshgrid(*[x for x, _ in axes], indexing="ij")
    wts = np.meshgrid(*[w for _, w in axes], indexing="ij")
    Z = np.stack([g.ravel() for g in grids], axis=1)
    W = np.prod(np.stack([w.ravel() for w in wts], axis=1), axis=1)
    return float(W @ density(Z))


def _ray_box_interval(theta, lo, hi):
    """r-range where r * theta lies in the box [lo, hi]."""
    r_lo, r_hi = 0.0, math.inf
    for t, a, b in zip(theta, lo, hi):
        if abs(t) < 1e-15:
            if a > 0 or b < 0:
                return None
            continue
        lo_i, hi_i = sorted((a / t, b / t))
        r_lo, r_hi = max(r_lo, lo_i), min(r_hi, hi_i)
    if r_hi <= max(r_lo, 0.0):
        return None
    return max(r_lo, 0.0), r_hi


def _radial_mass(alpha, a, b):
    """int_a^b r^(-1-alpha) dr, 0 < a < b."""
    return (a ** -alpha - b ** -alpha) / alpha


def box_measure(spec_or_kernel, lo, hi):
    """Measure of an axis-aligned box [lo, hi]; the box must avoid the
    origin for variants with a non-integrable density there."""
    if isinstance(spec_or_kernel, JumpKernelSpec):
        kern = spec_or_kernel
        spec, cap = kern.measure, kern.truncation
    else:
        spec, cap = spec_or_kernel, 1.0
        kern = JumpKernelSpec(spec, truncation=1.0)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if len(lo) != spec.d or len(hi) != spec.d:
        raise DimensionMismatch("box dimension mismatch")
    if np.all(lo <= 0) and np.all(hi >= 0) and spec.variant in (
            "isotropic_stable", "cone", "dyadic_shell"):
        raise ValueError("box contains the origin: measure is infinite")
    if spec.variant in ("isotropic_stable", "cone", "dyadic_shell"):
        return _box_measure_ac(spec.d, spec.alpha, kern.density, lo, hi)
    total = 0.0
    if spec.variant in ("axis", "spherical"):
        if spec.variant == "axis":
            packs = [(np.eye(spec.d)[i] * s, 1.0, a)
                     for i, a in enumerate(spec.alphas) for s in (+1, -1)]
        else:
            packs = [(np.asarray(dirn), mass, spec.alpha)
                     for dirn, mass in spec.atoms]
        for theta, mass, alpha in packs:
            iv = _ray_box_interval(theta, lo, hi)
            if iv is None:
                continue
            a = max(iv[0], 1e-300)
            b = min(iv[1], cap)
            if b > a:
                total += mass * _radial_mass(alpha, a, b)
        return total
    if spec.variant == "product_stable":
        d1 = spec.d1
        sub1 = LevyMeasureSpec(d=d1, variant="isotropic_stable", alpha=spec.alpha1)
        sub2 = LevyMeasureSpec(d=spec.d2, variant="isotropic_stable",
                               alpha=spec.alpha2)
        if np.all(lo[d1:] <= 0) and np.all(hi[d1:] >= 0):
            total += box_measure(JumpKernelSpec(sub1, cap), lo[:d1], hi[:d1])
        if np.all(lo[:d1] <= 0) and np.all(hi[:d1] >= 0):
            total += box_measure(JumpKernelSpec(sub2, cap), lo[d1:], hi[d1:])
        return total
    raise UnsupportedKernel(spec.variant)


@dataclass(frozen=True)
class DominationReport:
    margins: tuple
    tol: float

    @property
    def passed(self):
        return all(m >= -self.tol for m in self.margins)


def check_domination(kernel, nu, sample_sets, tol=1e-9):
    """Margins J0(A) - nu(A) over sample boxes A inside the unit ball.

    Passes when every margin is >= -tol; failures stay in the report
    rather than raising.
    """
    if kernel.d != nu.d:
        raise DimensionMismatch("kernel and measure dimensions differ")
    margins = []
    for lo, hi in sample_sets:
        jm = box_measure(kernel, lo, hi)
        nm = box_measure(nu, lo, hi)
        margins.append(jm - nm)
    scale = max([abs(m) for m in margins] + [1.0])
    return DominationReport(margins=tuple(margins), tol=tol * scale)


def small_jump_moment(kernel, tol=1e-8):
    """sup_x int (1 ^ |x-y|^2) J(x, dy) = int (1 ^ |z|^2) J0(dz)."""
    Z, w = kernel_rule(kernel, r_outer=2.0, level=3, growth=0.0)
    r2 = np.sum(Z ** 2, axis=1)
    return float(w @ np.minimum(1.0, r2))


# ----------------------------------------------------------------------
# lattice couplings for grid assembly
# ----------------------------------------------------------------------

def _integer_direction(theta, max_norm=6):
    """Smallest integer vector parallel to theta, or None."""
    theta = np.asarray(theta, dtype=float)
    nz = np.abs(theta) > 1e-12
    scale = np.min(np.abs(theta[nz]))
    cand = theta / scale
    for k in range(1, max_norm + 1):
        v = cand * k
        vr = np.round(v)
        if np.max(np.abs(v - vr)) < 1e-9 and np.any(vr != 0):
            g = int(abs(np.gcd.reduce(vr.astype(int))))
            return (vr / g).astype(int) if g > 0 else vr.astype(int)
    return None


def _cell_moment2_radial(alpha, lo, hi, cap, shells=None):
    """int r^2 r^(-1-alpha) dr = int r^(1-alpha) dr over [lo, hi] in (0, cap).

    With ``shells`` (dyadic variant) the integral runs over the kept
    shells only; pieces are summed in closed form.
    """
    def piece(a, b):
        p = 2.0 - alpha
        return (b ** p - a ** p) / p

    lo = max(lo, 0.0)
    hi = min(hi, cap)
    if hi <= lo:
        return 0.0
    if shells is None:
        return piece(lo, hi)
    total = 0.0
    for s_lo, s_hi in shells:
        a, b = max(lo, s_lo), min(hi, s_hi)
        if b > a:
            total += piece(a, b)
        if s_hi <= lo:
            break
    return total


@lru_cache(maxsize=64)
def _cell_gl(n):
    x, w = leggauss(n)
    return 0.5 * x, 0.5 * w  # on [-1/2, 1/2]


def lattice_couplings(kernel, h, r_cap):
    """Integer offsets m != 0 with second-moment-preserving cell weights.

    The weight of the dual cell around z_c = m h is

        w = |z_c|^-2 * int_{cell ^ support} |z|^2 J0(dz),

    so locally linear functions contribute their exact energy cell by
    cell, for every stability index; for interior cells at alpha = 1
    this reduces to plain cell-center collocation density(z_c) h^d.
    Closed-form radial integrals in d = 1 and along singular atoms, a
    small tensor Gauss rule per cell otherwise.  Only the self cell is
    dropped (the lost mass is O(h^(2-alpha)) per node).
    Returns (offsets (M, d) int array, weights (M,)).
    """
    d = kernel.d
    cap = min(r_cap, kernel.truncation)
    spec = kernel.measure
    if kernel.is_absolutely_continuous():
        shells = None
        if spec.variant == "dyadic_shell":
            shells = _dyadic_shells(spec.alpha, _n_dyadic_shells(spec.alpha, 3))
        if d == 1:
            m_max = int(math.ceil(cap / h + 0.5))
            ms = np.arange(1, m_max + 1)
            w_half = np.array([
                _cell_moment2_radial(spec.alpha, (m - 0.5) * h, (m + 0.5) * h,
                                     cap, shells) / (m * h) ** 2
                for m in ms])
            keep = w_half > 0
            ms = ms[keep]
            w_half = w_half[keep]
            offsets = np.concatenate([ms, -ms])[:, None].astype(int)
            return offsets, np.concatenate([w_half, w_half])
        m_max = int(math.ceil(cap / h + 0.5))
        rng = np.arange(-m_max, m_max + 1)
        grids = np.meshgrid(*([rng] * d), indexing="ij")
        offsets = np.stack([g.ravel() for g in grids], axis=1)
        nonzero = np.any(offsets != 0, axis=1)
        dist = np.linalg.norm(offsets * h, axis=1)
        near = dist < cap + h * math.sqrt(d)
        offsets = offsets[nonzero & near]
        gx, gw = _cell_gl(6)
        axes = np.meshgrid(*([gx] * d), indexing="ij")
        pts = np.stack([a.ravel() for a in axes], axis=1)  # (G, d) in cell units
        wts = np.meshgrid(*([gw] * d), indexing="ij")
        cw = np.prod(np.stack([w.ravel() for w in wts], axis=1), axis=1)
        Z = (offsets[:, None, :] + pts[None, :, :]) * h
        Zf = Z.reshape(-1, d)
        dens = (kernel.density(Zf) * np.sum(Zf ** 2, axis=1)).reshape(
            len(offsets), -1)
        w = (dens @ cw) * h ** d / np.sum((offsets * h) ** 2, axis=1)
        pos = w > 0
        return offsets[pos], w[pos]
    # singular variants: exact radial cells along integer atom directions
    spec = kernel.measure
    packs = []
    if spec.variant == "axis":
        for i, a in enumerate(spec.alphas):
            e = np.zeros(d, dtype=int)
            e[i] = 1
            packs.append((e, 1.0, a))
            packs.append((-e, 1.0, a))
    elif spec.variant == "spherical":
        for dirn, mass in spec.atoms:
            k = _integer_direction(dirn)
            if k is None:
                raise UnsupportedKernel(
                    "spherical atom direction is not grid-aligned; cannot "
                    "assemble on a uniform lattice")
            packs.append((k, mass, spec.alpha))
    elif spec.variant == "product_stable":
        if spec.d1 == 1:
            e = np.zeros(d, dtype=int)
            e[0] = 1
            packs.append((e, 1.0, spec.alpha1))
            packs.append((-e, 1.0, spec.alpha1))
        else:
            raise UnsupportedKernel("product_stable lattice assembly needs d1=1")
        if spec.d2 == 1:
            e = np.zeros(d, dtype=int)
            e[-1] = 1
            packs.append((e, 1.0, spec.alpha2))
            packs.append((-e, 1.0, spec.alpha2))
        else:
            raise UnsupportedKernel("product_stable lattice assembly needs d2=1")
    else:
        raise UnsupportedKernel(spec.variant)
    offsets, weights = [], []
    for k, mass, alpha in packs:
        step = float(np.linalg.norm(np.asarray(k, dtype=float) * h))
        m = 1
        while True:
            r_center = m * step
            a = max(r_center - 0.5 * step, 0.0)  # self cell excluded via m >= 1
            b = min(r_center + 0.5 * step, cap)
            if a >= cap:
                break
            if b > a:
                offsets.append(np.asarray(k, dtype=int) * m)
                weights.append(
                    mass * _cell_moment2_radial(alpha, a, b, cap) / r_center ** 2)
            m += 1
    if not offsets:
        return np.zeros((0, d), dtype=int), np.zeros(0)
    return np.stack(offsets), np.asarray(weights)
