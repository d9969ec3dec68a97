"""Weight functions W(x, y) and the quadratic lower-bound family V_lambda.

W splits at |x - y| = 1 into a short-range part built from a radial
profile U1 and a long-range part built from U2:

    W(x, y) = (U1(x) + U1(y)) 1_{|x-y|<1} + (U2(x) + U2(y)) 1_{|x-y|>=1}.

For every lambda > 0, a strictly positive C^1 radial function V_lambda
equal to lambda (1 + |x|^2) outside a ball B(0, R0) and dominated by
U1 / 2 everywhere certifies W(x, y) >= V_lambda(x) + V_lambda(y) on
|x - y| < 1.  The search for R0 over dyadic radii converts the
asymptotic growth hypothesis on U1 into a falsifiable finite test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GrowthInsufficient

_MARGIN = 0.10  # safety margin on the dyadic R0 search


@dataclass(frozen=True)
class RadialProfile:
    """Radial profile: scale * (1 + r)^exponent, or a tabulated function.

    Tables are piecewise linear in r with a right-constant extension
    beyond the last knot, which keeps local boundedness automatic.
    """

    kind: str = "power"                # "power" | "table"
    exponent: float = 0.0
    scale: float = 1.0
    radii: tuple | None = None
    values: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("power", "table"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "power":
            if self.exponent < 0:
                raise ValueError("profile exponent must be >= 0")
            if self.scale <= 0:
                raise ValueError("profile scale must be positive")
        else:
            if not self.radii or not self.values or len(self.radii) != len(self.values):
                raise ValueError("table needs matching radii/values")
            r = np.asarray(self.radii, dtype=float)
            if np.any(np.diff(r) <= 0):
                raise ValueError("table radii must be strictly increasing")
            if min(self.values) < 0:
                raise ValueError("table values must be nonnegative")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "power":
            return self.scale * (1.0 + r) ** self.exponent
        rt = np.asarray(self.radii)
        vt = np.asarray(self.values)
        out = np.interp(r, rt, vt)  # np.interp clamps = right-constant extension
        return out

    def label(self):
        if self.kind == "power":
            if self.scale == 1.0:
                return f"(1+r)^{self.exponent:g}"
            return f"{self.scale:g}*(1+r)^{self.exponent:g}"
        return f"table[{len(self.radii)} pts]"


@dataclass(frozen=True)
class WeightSpec:
    """Symmetric weight with the |x - y| < 1 short/long-range split."""

    u1: RadialProfile
    u2: RadialProfile
    cut_radius: float = 1.0

    def __post_init__(self):
        if self.cut_radius != 1.0:
            raise ValueError("the split radius is fixed at 1")

    @classmethod
    def power(cls, p, q, scale1=1.0, scale2=1.0):
        return cls(u1=RadialProfile("power", exponent=p, scale=scale1),
                   u2=RadialProfile("power", exponent=q, scale=scale2))

    def scaled(self, factor):
        """The weight factor * W (used for linearity checks)."""
        def scale_profile(p):
            if p.kind == "power":
                return RadialProfile("power", exponent=p.exponent,
                                     scale=p.scale * factor)
            return RadialProfile("table", radii=p.radii,
                                 values=tuple(v * factor for v in p.values))
        return WeightSpec(u1=scale_profile(self.u1), u2=scale_profile(self.u2))

    def label(self):
        return f"W[u1={self.u1.label()},u2={self.u2.label()}]"


def eval_W(x, y, spec):
    """W(x, y) for single points; symmetric by construction."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    rx, ry = np.linalg.norm(x), np.linalg.norm(y)
    if np.linalg.norm(x - y) < spec.cut_radius:
        return float(spec.u1(rx) + spec.u1(ry))
    return float(spec.u2(rx) + spec.u2(ry))


def eval_W_radii(rx, ry, short_range, spec):
    """Vectorized W from precomputed radii |x|, |y| and the range flag."""
    rx = np.asarray(rx, dtype=float)
    ry = np.asarray(ry, dtype=float)
    if np.isscalar(short_range) or short_range is True or short_range is False:
        prof = spec.u1 if short_range else spec.u2
        return prof(rx) + prof(ry)
    short_range = np.asarray(short_range, dtype=bool)
    return np.where(short_range,
                    spec.u1(rx) + spec.u1(ry),
                    spec.u2(rx) + spec.u2(ry))


@dataclass(frozen=True)
class VLambdaSpec:
    """Radial C^1 lower-bound function for one lambda.

    Equal to inner_floor on [0, R0/2], to lam * (1 + r^2) on [R0, inf),
    and a monotone cubic Hermite blend in radius in between (value and
    derivative matched at both knots).
    """

    lam: float
    R0: float
    inner_floor: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        a, b = 0.5 * self.R0, self.R0
        out = np.empty_like(r)
        inner = r <= a
        outer = r >= b
        mid = ~inner & ~outer
        out[inner] = self.inner_floor
        out[outer] = self.lam * (1.0 + r[outer] ** 2)
        if np.any(mid):
            t = (r[mid] - a) / (b - a)
            h00 = 2 * t ** 3 - 3 * t ** 2 + 1
            h01 = -2 * t ** 3 + 3 * t ** 2
            h11 = t ** 3 - t ** 2
            p1 = self.lam * (1.0 + b ** 2)
            m1 = 2.0 * self.lam * b * (b - a)
            out[mid] = self.inner_floor * h00 + p1 * h01 + m1 * h11
        return out

    def at_points(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self(np.linalg.norm(X, axis=1))

    @property
    def infimum(self):
        # the blend is monotone (Fritsch-Carlson: zero left slope,
        # right slope below 3x the secant), so the floor is the infimum
        return self.inner_floor

    def w_lambda(self, rx, ry):
        """W_lambda(x, y) = V(x) + V(y) from radii."""
        return self(np.asarray(rx, dtype=float)) + self(np.asarray(ry, dtype=float))


def _probe_radii(r_half, r_top):
    """Dense log+linear probe grid on [r_half, r_top]."""
    geo = np.geomspace(max(r_half, 1e-3), r_top, 200)
    lin = np.linspace(r_half, min(r_top, r_half + 8.0), 100)
    return np.unique(np.concatenate([[r_half], geo, lin, [r_top]]))


def build_V_lambda(lam, spec, radius_budget=4096.0, probe_factor=8.0,
                   n_pair_checks=2000, seed=0):
    """Search dyadic radii for the smallest admissible R0 and build V_lambda.

    A candidate R0 is accepted when U1(r) >= 2 lam (1 + r^2)(1 + margin)
    for all probed r >= R0/2 (sufficient for the pairwise domination via
    V <= U1/2 and monotonicity) and the built blend actually satisfies
    V(r) <= U1(r)/2 on a dense radial grid.  The domination invariant is
    re-verified on random pairs before returning.

    Raises GrowthInsufficient when no R0 <= radius_budget works; for
    power-law U1 this is the numerical signature of U1(x)/|x|^2 failing
    to diverge.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    u1 = spec.u1
    probe_top = probe_factor * radius_budget
    inf_probe = float(np.min(u1(np.linspace(0.0, probe_top, 4000))))
    if inf_probe <= 0:
        raise GrowthInsufficient("inf U1 <= 0 on the probed range")
    floor = min(inf_probe / 4.0, lam)
    R0 = 1.0
    while R0 <= radius_budget:
        radii = _probe_radii(0.5 * R0, probe_factor * R0)
        need = 2.0 * lam * (1.0 + radii ** 2) * (1.0 + _MARGIN)
        if np.all(u1(radii) >= need):
            cand = VLambdaSpec(lam=lam, R0=R0, inner_floor=floor)
            dense = np.linspace(0.0, probe_factor * R0, 6000)
            if np.all(cand(dense) <= 0.5 * u1(dense) + 1e-12 * u1(dense)):
                _verify_domination(cand, spec, probe_factor * R0,
                                   n_pair_checks, seed)
                return cand
        R0 *= 2.0
    raise GrowthInsufficient(
        f"no R0 <= {radius_budget} makes U1 dominate 2*lam*(1+r^2); "
        f"lambda={lam:g} is too large for this short-range profile")


def _verify_domination(vlam, spec, r_top, n_pairs, seed):
    rng = np.random.default_rng(seed)
    rx = rng.uniform(0.0, r_top, n_pairs)
    # partner at distance < 1 in some dimension: radius within (rx-1, rx+1)
    ry = np.clip(rx + rng.uniform(-1.0, 1.0, n_pairs), 0.0, None)
    w = spec.u1(rx) + spec.u1(ry)
    v = vlam(rx) + vlam(ry)
    bad = v > w * (1 + 1e-12)
    if np.any(bad):
        i = int(np.argmax(v - w))
        raise GrowthInsufficient(
            f"domination W >= V(x)+V(y) failed at radii ({rx[i]:g}, {ry[i]:g})")


@dataclass(frozen=True)
class GrowthReport:
    """Dyadic-probe estimates of the quadratic-growth hypotheses."""

    radii: tuple
    ratios: tuple           # U1(r) / r^2 at the probed radii
    liminf_estimate: float
    limsup_estimate: float
    slope: float            # log-log slope of U1(r)/r^2 on the top half
    q_ok: bool
    verdict: str            # compact-indicated | noncompact-indicated | inconclusive


def growth_check(spec, kernel_alpha, radius_budget=65536.0):
    """Probe U1(r)/r^2 over dyadic radii and classify the expected side.

    The verdict encodes a documented heuristic: a fitted log-log slope of
    U1(r)/r^2 above 0.1 over the top half of the probed radii indicates
    divergence (compact side, provided the long-range exponent check
    q < alpha also passes); otherwise the bounded side is indicated.
    """
    radii = [2.0 ** k for k in range(0, int(math.log2(radius_budget)) + 1)]
    r = np.asarray(radii)
    ratios = spec.u1(r) / r ** 2
    top = len(r) // 2
    logr = np.log(r[top:])
    logv = np.log(np.maximum(ratios[top:], 1e-300))
    slope = float(np.polyfit(logr, logv, 1)[0])
    resid = float(np.max(np.abs(np.polyval(np.polyfit(logr, logv, 1), logr) - logv)))
    if spec.u2.kind == "power":
        q_ok = spec.u2.exponent < kernel_alpha
    else:
        # tabulated long-range profiles are bounded, hence q = 0 < alpha
        q_ok = True
    if resid > 0.5:
        verdict = "inconclusive"
    elif slope > 0.1 and q_ok:
        verdict = "compact-indicated"
    else:
        verdict = "noncompact-indicated"
    return GrowthReport(
        radii=tuple(radii),
        ratios=tuple(float(v) for v in ratios),
        liminf_estimate=float(np.min(ratios[top:])),
        limsup_estimate=float(np.max(ratios[top:])),
        slope=slope,
        q_ok=q_ok,
        verdict=verdict,
    )
