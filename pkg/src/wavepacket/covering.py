"""Frequency-plane coverings built from scaled, shifted and rotated rectangles.

The main object is the two-parameter family of coverings of R^2 whose patches
have radial length ~ (1+|xi|)^alpha and angular width ~ (1+|xi|)^beta.  Each
patch is the image of a fixed base rectangle under an invertible affine map;
a low-pass disc covers the origin.  Besov-type dyadic annuli, alpha-modulation
ball coverings and linearly dilated coverings are provided behind the same
interface so that partitions of unity and decomposition norms can be computed
over any of them.

All geometric predicates (containment, intersection) are exact up to floating
point: open sets are tested with strict comparisons, closed inner sets with
non-strict ones, and rotated-rectangle intersection uses the separating-axis
criterion, so boundary contact counts as *not* intersecting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

DEFAULT_N_CONST = 10
DEFAULT_EPSILON = 1.0 / 64.0

_CEIL_SNAP = 1e-9  # snap (1-alpha)j-1 style exponents to integers before ceil


def _ceil_pow2(exponent: float, factor: float = 1.0) -> int:
    """ceil(factor * 2**exponent) without float error when exponent is integral."""
    k = round(exponent)
    if abs(exponent - k) < _CEIL_SNAP:
        if k >= 0:
            value = factor * (1 << k)
        else:
            value = factor / (1 << -k)
    else:
        value = factor * 2.0 ** exponent
    c = math.ceil(value)
    # guard against ties produced by float representation of `value`
    if c - value > 1.0 - 1e-12 and abs(round(value) - value) < 1e-9:
        c = round(value)
    return int(c)


@dataclass(frozen=True)
class CoveringSpec:
    """Parameters of one wave packet covering.

    ``alpha`` controls radial patch length, ``beta <= alpha`` angular width,
    ``epsilon`` the overlap margin of the base rectangle, and ``n_const`` the
    angular density constant N (10 unless explicitly overridden; overriding is
    flagged non-conformant but allowed for experiments).
    """

    alpha: float
    beta: float
    epsilon: float = DEFAULT_EPSILON
    n_const: int = DEFAULT_N_CONST

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must be in [0,1], got {self.alpha}")
        if not (0.0 <= self.beta <= self.alpha):
            raise ValueError(
                f"need 0 <= beta <= alpha, got beta={self.beta}, alpha={self.alpha}")
        if not (0.0 < self.epsilon < 1.0 / 32.0):
            raise ValueError(f"epsilon must lie in (0, 1/32), got {self.epsilon}")
        if self.n_const < 1:
            raise ValueError("n_const must be a positive integer")

    @property
    def conformant(self) -> bool:
        return self.n_const == DEFAULT_N_CONST


@dataclass(frozen=True, order=True)
class WPIndex:
    """Index of one covering patch: the low-pass index or a triple (j, m, ell)."""

    j: int
    m: int
    ell: int

    @classmethod
    def zero(cls) -> "WPIndex":
        return cls(0, 0, 0)

    @classmethod
    def triple(cls, j: int, m: int, ell: int) -> "WPIndex":
        if j < 1 or m < 0 or ell < 0:
            raise ValueError(f"invalid triple ({j},{m},{ell})")
        return cls(j, m, ell)

    @property
    def is_zero(self) -> bool:
        return self.j == 0

    def __repr__(self):
        return "Zero" if self.is_zero else f"({self.j},{self.m},{self.ell})"


ZERO = WPIndex.zero()


def max_m(j: int, spec: CoveringSpec) -> int:
    """Largest radial shift index at scale j: ceil(2^((1-alpha)j - 1))."""
    if j < 1:
        raise ValueError("j must be >= 1")
    return _ceil_pow2((1.0 - spec.alpha) * j - 1.0)


def max_ell(j: int, spec: CoveringSpec) -> int:
    """Largest rotation index at scale j: ceil(N * 2^((1-beta)j))."""
    if j < 1:
        raise ValueError("j must be >= 1")
    return _ceil_pow2((1.0 - spec.beta) * j, factor=spec.n_const)


def validate_index(i: WPIndex, spec: CoveringSpec) -> None:
    if i.is_zero:
        return
    if i.m > max_m(i.j, spec) or i.ell > max_ell(i.j, spec):
        raise ValueError(f"index {i} out of range for spec {spec}")


def enumerate_indices(spec: CoveringSpec, j_max: int) -> list[WPIndex]:
    """Zero followed by all (j, m, ell) with j <= j_max, lexicographic order."""
    if j_max < 1:
        raise ValueError("j_max must be >= 1")
    out = [ZERO]
    for j in range(1, j_max + 1):
        mj, lj = max_m(j, spec), max_ell(j, spec)
        out.extend(WPIndex(j, m, ell)
                   for m in range(mj + 1) for ell in range(lj + 1))
    return out


def rotation_angle(i: WPIndex, spec: CoveringSpec) -> float:
    """Theta_{j,ell} = 2 ell (pi/N) 2^((beta-1) j); 0 for the low-pass index."""
    if i.is_zero:
        return 0.0
    return 2.0 * i.ell * (math.pi / spec.n_const) * 2.0 ** ((spec.beta - 1.0) * i.j)


@dataclass(frozen=True)
class AffineMap2:
    """Invertible affine map xi -> t @ xi + b on the frequency plane."""

    t: np.ndarray  # (2, 2)
    b: np.ndarray  # (2,)

    def __post_init__(self):
        if abs(self.det) < 1e-300:
            raise ValueError("affine map must be invertible")

    @property
    def det(self) -> float:
        t = self.t
        return float(t[0, 0] * t[1, 1] - t[0, 1] * t[1, 0])

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        return np.asarray(xi) @ self.t.T + self.b

    def inverse(self, xi: np.ndarray) -> np.ndarray:
        return (np.asarray(xi) - self.b) @ np.linalg.inv(self.t).T

    def compose_left(self, a: np.ndarray) -> "AffineMap2":
        """Return the map xi -> a @ (t xi + b)."""
        a = np.asarray(a, dtype=float)
        return AffineMap2(a @ self.t, a @ self.b)


def spectral_norm_2x2(m: np.ndarray) -> float:
    """Largest singular value of a 2x2 matrix, closed form."""
    a, b, c, d = float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1])
    e = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = max(e * e - 4.0 * det * det, 0.0)
    return math.sqrt(max((e + math.sqrt(disc)) / 2.0, 0.0))


# ---------------------------------------------------------------------------
# base sets and patches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def contains(self, pts: np.ndarray, strict: bool) -> np.ndarray:
        p = np.atleast_2d(pts)
        if strict:
            ok = (p[:, 0] > self.x0) & (p[:, 0] < self.x1) \
                & (p[:, 1] > self.y0) & (p[:, 1] < self.y1)
        else:
            ok = (p[:, 0] >= self.x0) & (p[:, 0] <= self.x1) \
                & (p[:, 1] >= self.y0) & (p[:, 1] <= self.y1)
        return ok if pts.ndim > 1 else bool(ok[0])

    @property
    def corners(self) -> np.ndarray:
        return np.array([[self.x0, self.y0], [self.x1, self.y0],
                         [self.x1, self.y1], [self.x0, self.y1]])

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class Disc:
    radius: float

    def contains(self, pts: np.ndarray, strict: bool) -> np.ndarray:
        p = np.atleast_2d(pts)
        r2 = p[:, 0] ** 2 + p[:, 1] ** 2
        ok = r2 < self.radius ** 2 if strict else r2 <= self.radius ** 2
        return ok if pts.ndim > 1 else bool(ok[0])

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2


@dataclass(frozen=True)
class Annulus:
    r_in: float
    r_out: float

    def contains(self, pts: np.ndarray, strict: bool) -> np.ndarray:
        p = np.atleast_2d(pts)
        r = np.hypot(p[:, 0], p[:, 1])
        if strict:
            ok = (r > self.r_in) & (r < self.r_out)
        else:
            ok = (r >= self.r_in) & (r <= self.r_out)
        return ok if pts.ndim > 1 else bool(ok[0])

    @property
    def area(self) -> float:
        return math.pi * (self.r_out ** 2 - self.r_in ** 2)


BaseSet = Rect | Disc | Annulus


@dataclass(frozen=True)
class Patch:
    """A covering patch: affine image of a base set.

    ``kind`` is "poly" for affine images of rectangles, "disc" for similarity
    images of discs, "annulus" for origin-centred rings.
    """

    map: AffineMap2
    base: BaseSet

    def contains(self, xi: np.ndarray, strict: bool) -> np.ndarray:
        return self.base.contains(self.map.inverse(xi), strict)

    @property
    def kind(self) -> str:
        if isinstance(self.base, Rect):
            return "poly"
        if isinstance(self.base, Annulus):
            return "annulus"
        t = self.map.t
        # similarity check: t^T t proportional to identity
        g = t.T @ t
        if abs(g[0, 1]) <= 1e-12 * abs(g[0, 0]) and abs(g[0, 0] - g[1, 1]) <= 1e-12 * abs(g[0, 0]):
            return "disc"
        return "ellipse"

    @property
    def area(self) -> float:
        return abs(self.map.det) * self.base.area

    def vertices(self) -> np.ndarray:
        if not isinstance(self.base, Rect):
            raise TypeError("vertices only defined for rectangle-based patches")
        return self.map(self.base.corners)

    def disc_params(self) -> tuple[np.ndarray, float]:
        if not isinstance(self.base, Disc):
            raise TypeError("not a disc patch")
        scale = math.sqrt(abs(self.map.det))
        return self.map.b, self.base.radius * scale

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform random points of the (open) patch."""
        if isinstance(self.base, Rect):
            u = rng.uniform([self.base.x0, self.base.y0],
                            [self.base.x1, self.base.y1], size=(n, 2))
        elif isinstance(self.base, Disc):
            r = self.base.radius * np.sqrt(rng.uniform(0, 1, n))
            t = rng.uniform(0, 2 * math.pi, n)
            u = np.column_stack([r * np.cos(t), r * np.sin(t)])
        else:
            r = np.sqrt(rng.uniform(self.base.r_in ** 2, self.base.r_out ** 2, n))
            t = rng.uniform(0, 2 * math.pi, n)
            u = np.column_stack([r * np.cos(t), r * np.sin(t)])
        return self.map(u)

    def bounding_box(self) -> tuple[float, float, float, float]:
        if isinstance(self.base, Rect):
            v = self.vertices()
            return (v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max())
        if isinstance(self.base, Disc):
            c, r = self.disc_params()
            return (c[0] - r, c[0] + r, c[1] - r, c[1] + r)
        r = self.base.r_out
        return (-r, r, -r, r)

    def radial_range(self) -> tuple[float, float]:
        """Exact [min |xi|, max |xi|] over the closed patch."""
        if isinstance(self.base, Rect):
            v = self.vertices()
            dmax = float(np.max(np.hypot(v[:, 0], v[:, 1])))
            dmin = _point_poly_distance(np.zeros(2), v)
            return dmin, dmax
        if isinstance(self.base, Disc):
            c, r = self.disc_params()
            d = float(np.hypot(c[0], c[1]))
            return max(0.0, d - r), d + r
        return self.base.r_in, self.base.r_out


def _point_poly_distance(p: np.ndarray, verts: np.ndarray) -> float:
    """Distance from point to a closed convex polygon (0 if inside)."""
    v = verts
    n = len(v)
    sign = 0.0
    inside = True
    for k in range(n):
        a, b = v[k], v[(k + 1) % n]
        cr = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if sign == 0.0 and cr != 0.0:
            sign = math.copysign(1.0, cr)
        elif cr * sign < 0.0:
            inside = False
            break
    if inside:
        return 0.0
    best = math.inf
    for k in range(n):
        a, b = v[k], v[(k + 1) % n]
        ab = b - a
        t = float(np.dot(p - a, ab) / np.dot(ab, ab))
        t = min(1.0, max(0.0, t))
        best = min(best, float(np.hypot(*(a + t * ab - p))))
    return best


def _poly_poly_intersect(va: np.ndarray, vb: np.ndarray) -> bool:
    """Open-parallelogram SAT; touching boundaries count as disjoint."""
    for verts in (va, vb):
        for k in (0, 1):
            edge = verts[k + 1] - verts[k]
            axis = np.array([-edge[1], edge[0]])
            pa = va @ axis
            pb = vb @ axis
            if pa.max() <= pb.min() or pb.max() <= pa.min():
                return False
    return True


def patches_intersect(p1: Patch, p2: Patch) -> bool:
    """Exact open-set intersection test between two patches."""
    k1, k2 = p1.kind, p2.kind
    if k1 > k2:
        p1, p2, k1, k2 = p2, p1, k2, k1  # order: annulus < disc < poly
    if k1 == "poly":  # poly-poly
        return _poly_poly_intersect(p1.vertices(), p2.vertices())
    if k1 == "disc":
        c1, r1 = p1.disc_params()
        if k2 == "disc":
            return float(np.hypot(*(c1 - p2.disc_params()[0]))) < r1 + p2.disc_params()[1]
        return _point_poly_distance(c1, p2.vertices()) < r1
    # annulus vs anything: compare radial ranges (annuli are origin-centred)
    r_in, r_out = p1.base.r_in, p1.base.r_out
    dmin, dmax = p2.radial_range()
    return dmin < r_out and dmax > r_in


# ---------------------------------------------------------------------------
# the wave packet covering
# ---------------------------------------------------------------------------

OUTER_DISC_RADIUS = 4.0
INNER_DISC_RADIUS = 3.0


def outer_base(spec: CoveringSpec) -> Rect:
    e = spec.epsilon
    return Rect(-e, 1.0 + e, -1.0 - e, 1.0 + e)


INNER_BASE = Rect(0.0, 1.0, -1.0, 1.0)


def affine_map(i: WPIndex, spec: CoveringSpec) -> AffineMap2:
    """The map generating patch i from the base set."""
    validate_index(i, spec)
    if i.is_zero:
        return AffineMap2(np.eye(2), np.zeros(2))
    aj = 2.0 ** (spec.alpha * i.j)
    bj = 2.0 ** (spec.beta * i.j)
    th = rotation_angle(i, spec)
    c, s = math.cos(th), math.sin(th)
    rot = np.array([[c, -s], [s, c]])
    t = rot @ np.diag([aj, bj])
    center = np.array([2.0 ** (i.j - 1) + i.m * aj, 0.0])
    return AffineMap2(t, rot @ center)


def patch(i: WPIndex, spec: CoveringSpec, which: str = "outer") -> Patch:
    m = affine_map(i, spec)
    if i.is_zero:
        base = Disc(OUTER_DISC_RADIUS) if which == "outer" else Disc(INNER_DISC_RADIUS)
    else:
        base = outer_base(spec) if which == "outer" else INNER_BASE
    return Patch(m, base)


def contains(i: WPIndex, xi, spec: CoveringSpec, which: str = "outer"):
    """Is xi in the open outer patch Q_i / closed inner patch P_i?"""
    strict = which == "outer"
    return patch(i, spec, which).contains(np.asarray(xi, dtype=float), strict)


def intersects(i: WPIndex, ip: WPIndex, spec: CoveringSpec,
               spec2: CoveringSpec | None = None) -> bool:
    """Do the open patches Q_i (under spec) and Q_i' (under spec2) meet?"""
    return patches_intersect(patch(i, spec), patch(ip, spec2 or spec))


def norm_bounds(i: WPIndex, spec: CoveringSpec) -> tuple[float, float]:
    """Radial bounds: every xi in Q_i has |xi| within the returned interval."""
    if i.is_zero:
        raise ValueError("norm_bounds is defined for triple indices only")
    aj = 2.0 ** (spec.alpha * i.j)
    base = 2.0 ** (i.j - 1)
    return (base + aj * (i.m - spec.epsilon),
            base + aj * (i.m + 2.0 + 2.0 * spec.epsilon))


def angle_bound(i: WPIndex, spec: CoveringSpec) -> tuple[float, float]:
    """(patch orientation angle, half-width): polar angles of Q_i stay within."""
    if i.is_zero:
        raise ValueError("angle_bound is defined for triple indices only")
    half = 4.0 * (1.0 + spec.epsilon) * 2.0 ** ((spec.beta - 1.0) * i.j)
    return rotation_angle(i, spec), half


def transition_norm(i: WPIndex, ip: WPIndex, spec: CoveringSpec,
                    spec2: CoveringSpec | None = None) -> float:
    """Spectral norm of T_i^{-1} T_i' (closed-form singular value)."""
    t1 = affine_map(i, spec).t
    t2 = affine_map(ip, spec2 or spec).t
    return spectral_norm_2x2(np.linalg.inv(t1) @ t2)


def weight(i: WPIndex, s: float) -> float:
    """Scale weight 2^{js} (1 on the low-pass patch)."""
    return 1.0 if i.is_zero else 2.0 ** (i.j * s)


# ---------------------------------------------------------------------------
# vectorized index tables
# ---------------------------------------------------------------------------

class WavePacketCovering:
    """Array-backed enumeration of a truncated wave packet covering.

    Index 0 of every per-index array is the low-pass patch.  Used by the
    partition, norm, neighbor-search and audit machinery, which all need
    bulk geometry rather than per-index objects.
    """

    def __init__(self, spec: CoveringSpec, j_max: int):
        self.spec = spec
        self.j_max = j_max
        self.indices = enumerate_indices(spec, j_max)
        n = len(self.indices)
        self.js = np.fromiter((i.j for i in self.indices), int, n)
        self.ms = np.fromiter((i.m for i in self.indices), int, n)
        self.ells = np.fromiter((i.ell for i in self.indices), int, n)
        a, b, eps, nc = spec.alpha, spec.beta, spec.epsilon, spec.n_const
        self.aj = 2.0 ** (a * self.js)
        self.bj = 2.0 ** (b * self.js)
        self.theta = 2.0 * self.ells * (math.pi / nc) * 2.0 ** ((b - 1.0) * self.js)
        self.cx = 2.0 ** (self.js - 1.0) + self.ms * self.aj  # radial centre offset
        self.cos_t = np.cos(self.theta)
        self.sin_t = np.sin(self.theta)
        # radial interval of |xi| over each patch (row 0: the disc)
        self.radial_lo = np.where(
            self.js > 0, 2.0 ** (self.js - 1.0) + self.aj * (self.ms - eps), 0.0)
        self.radial_hi = np.where(
            self.js > 0, 2.0 ** (self.js - 1.0) + self.aj * (self.ms + 2 + 2 * eps),
            OUTER_DISC_RADIUS)
        self.angle_half = 4.0 * (1.0 + eps) * 2.0 ** ((b - 1.0) * self.js)
        self._corners: np.ndarray | None = None

    def __len__(self):
        return len(self.indices)

    @property
    def corners(self) -> np.ndarray:
        """(n, 4, 2) outer-rectangle corners; row 0 holds the disc's bounding box."""
        if self._corners is None:
            e = self.spec.epsilon
            base = np.array([[-e, -1 - e], [1 + e, -1 - e],
                             [1 + e, 1 + e], [-e, 1 + e]])
            x = base[:, 0][None, :] * self.aj[:, None] + self.cx[:, None]
            y = base[:, 1][None, :] * self.bj[:, None]
            cx = self.cos_t[:, None] * x - self.sin_t[:, None] * y
            cy = self.sin_t[:, None] * x + self.cos_t[:, None] * y
            self._corners = np.stack([cx, cy], axis=-1)
            r = OUTER_DISC_RADIUS
            self._corners[0] = np.array([[-r, -r], [r, -r], [r, r], [-r, r]])
        return self._corners

    def patch(self, k: int, which: str = "outer") -> Patch:
        return patch(self.indices[k], self.spec, which)

    def pullback(self, k: int, xi: np.ndarray) -> np.ndarray:
        """Map points to base coordinates of patch k (vectorized)."""
        xi = np.atleast_2d(xi)
        if k == 0:
            return xi
        c, s = self.cos_t[k], self.sin_t[k]
        x = c * xi[:, 0] + s * xi[:, 1]
        y = -s * xi[:, 0] + c * xi[:, 1]
        return np.column_stack([(x - self.cx[k]) / self.aj[k], y / self.bj[k]])

    def weights(self, s: float) -> np.ndarray:
        return np.where(self.js > 0, 2.0 ** (self.js * s), 1.0)


def _batch_sat(va: np.ndarray, vb: np.ndarray) -> np.ndarray:
    """Vectorized open SAT for stacks of parallelograms (n,4,2) vs (n,4,2)."""
    n = va.shape[0]
    ok = np.ones(n, dtype=bool)
    for verts in (va, vb):
        for k in (0, 1):
            edge = verts[:, k + 1, :] - verts[:, k, :]
            axis = np.stack([-edge[:, 1], edge[:, 0]], axis=-1)
            pa = np.einsum("nvc,nc->nv", va, axis)
            pb = np.einsum("nvc,nc->nv", vb, axis)
            ok &= (pa.max(1) > pb.min(1)) & (pb.max(1) > pa.min(1))
            if not ok.any():
                break
    return ok


def _cross_pairs(ca: WavePacketCovering, cb: WavePacketCovering,
                 delta_j: int) -> Iterable[tuple[np.ndarray, np.ndarray]]:
    """Candidate index pairs (rows of ca x rows of cb) that can intersect.

    Pruned by the radial-interval and angular necessary conditions (geometry
    bounds valid for any two wave packet coverings); the caller runs the exact
    SAT test on the survivors.  Yields (ia, ib) integer-array chunks.
    """
    eps = max(ca.spec.epsilon, cb.spec.epsilon)
    two_pi = 2.0 * math.pi
    j_pairs = [(ja, jb)
               for ja in range(0, ca.j_max + 1)
               for jb in range(0, cb.j_max + 1)
               if abs(ja - jb) <= delta_j or ja == 0 or jb == 0]
    for ja, jb in j_pairs:
        sel_a = np.flatnonzero(ca.js == ja)
        sel_b = np.flatnonzero(cb.js == jb)
        if not len(sel_a) or not len(sel_b):
            continue
        lo_a, hi_a = ca.radial_lo[sel_a], ca.radial_hi[sel_a]
        lo_b, hi_b = cb.radial_lo[sel_b], cb.radial_hi[sel_b]
        rad = (lo_a[:, None] < hi_b[None, :]) & (lo_b[None, :] < hi_a[:, None])
        if ja > 0 and jb > 0:
            da = np.abs(ca.theta[sel_a][:, None] - cb.theta[sel_b][None, :])
            da = np.minimum(np.abs(da - np.round(da / two_pi) * two_pi), da % two_pi)
            tol = 4.0 * (1.0 + eps) * (2.0 ** ((ca.spec.beta - 1.0) * ja)
                                       + 2.0 ** ((cb.spec.beta - 1.0) * jb))
            rad &= da <= tol + 1e-12
        ii, jj = np.nonzero(rad)
        if len(ii):
            yield sel_a[ii], sel_b[jj]


def intersecting_pairs(ca: WavePacketCovering, cb: WavePacketCovering | None = None,
                       delta_j: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """All index pairs (k_a, k_b) with open patches intersecting.

    Within one covering, scale separation |j-j'| <= 3 holds; across two
    coverings |j-j'| <= 4.  The prefilter uses those bounds' underlying radial
    and angular estimates, so it never loses a true pair (cross-checked by a
    full scan in the tests).
    """
    same = cb is None
    cb = cb or ca
    if delta_j is None:
        delta_j = 3 if same else 4
    # prefilter with a slack scale window; exactness comes from the SAT pass
    out_a, out_b = [], []
    for ia, ib in _cross_pairs(ca, cb, delta_j + 2):
        tri = (ca.js[ia] > 0) & (cb.js[ib] > 0)
        keep = np.zeros(len(ia), dtype=bool)
        if tri.any():
            keep[tri] = _batch_sat(ca.corners[ia[tri]], cb.corners[ib[tri]])
        mixed = np.flatnonzero(~tri)
        for t in mixed:
            keep[t] = patches_intersect(ca.patch(int(ia[t])), cb.patch(int(ib[t])))
        out_a.append(ia[keep])
        out_b.append(ib[keep])
    if not out_a:
        return np.empty(0, int), np.empty(0, int)
    return np.concatenate(out_a), np.concatenate(out_b)


def neighbors(i: WPIndex, spec: CoveringSpec, j_max: int,
              cov: WavePacketCovering | None = None) -> list[WPIndex]:
    """i* = all enumerated indices whose patch meets Q_i (including i itself)."""
    cov = cov or WavePacketCovering(spec, j_max)
    try:
        k = cov.indices.index(i)
    except ValueError:
        raise ValueError(f"{i} is not enumerable under j_max={j_max}")
    single = _single_row_covering(cov, k)
    ia, ib = intersecting_pairs(single, cov)
    return [cov.indices[t] for t in sorted(set(int(x) for x in ib))]


def _single_row_covering(cov: WavePacketCovering, k: int) -> WavePacketCovering:
    """A one-index view reusing cov's arrays (cheap wrapper for pair search)."""
    view = object.__new__(WavePacketCovering)
    view.spec, view.j_max = cov.spec, cov.j_max
    view.indices = [cov.indices[k]]
    for name in ("js", "ms", "ells", "aj", "bj", "theta", "cx", "cos_t", "sin_t",
                 "radial_lo", "radial_hi", "angle_half"):
        setattr(view, name, getattr(cov, name)[k:k + 1])
    view._corners = cov.corners[k:k + 1]
    return view


# ---------------------------------------------------------------------------
# coverage verification
# ---------------------------------------------------------------------------

@dataclass
class CoverageReport:
    tested: int
    misses: np.ndarray  # (k, 2) points not in any inner set

    @property
    def ok(self) -> bool:
        return len(self.misses) == 0


def verify_coverage(spec: CoveringSpec, j_max: int, sample_count: int,
                    seed: int = 0) -> CoverageReport:
    """Sample |xi| <= 2^(j_max-1) and check every point lies in some inner set.

    Fast pass: per scale, only a few candidate (m, ell) cells (predicted from
    polar coordinates) are tested.  Any point still uncovered afterwards is
    re-checked against *every* index, so the report is exact.
    """
    if j_max < 2:
        raise ValueError("j_max must be >= 2")
    rng = np.random.default_rng(seed)
    radius = 2.0 ** (j_max - 1)
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, sample_count))
    t = rng.uniform(0.0, 2.0 * math.pi, sample_count)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])

    covered = r <= INNER_DISC_RADIUS
    a, b, nc = spec.alpha, spec.beta, spec.n_const
    for j in range(1, j_max + 1):
        todo = np.flatnonzero(~covered)
        if not len(todo):
            break
        aj, bj = 2.0 ** (a * j), 2.0 ** (b * j)
        base_r = 2.0 ** (j - 1)
        mj, lj = max_m(j, spec), max_ell(j, spec)
        phi_j = (math.pi / nc) * 2.0 ** ((b - 1.0) * j)
        # restrict to the radial band this scale can reach
        rr = r[todo]
        band = (rr >= base_r - 1.5 * aj) & (rr <= base_r + (mj + 2) * aj + bj)
        todo = todo[band]
        if not len(todo):
            continue
        x, y = pts[todo, 0], pts[todo, 1]
        rr = r[todo]
        phi = np.mod(np.arctan2(y, x), 2.0 * math.pi)
        m0 = np.floor((rr - base_r) / aj).astype(int)
        l0 = np.floor(phi / (2.0 * phi_j)).astype(int)
        hit = np.zeros(len(todo), dtype=bool)
        for wrap in (0.0, -2.0 * math.pi):
            lw = np.floor((phi + wrap) / (2.0 * phi_j)).astype(int) if wrap else l0
            for dm in range(-3, 2):
                mm = m0 + dm
                valid_m = (mm >= 0) & (mm <= mj)
                for dl in range(-2, 3):
                    ll = lw + dl
                    sel = np.flatnonzero(~hit & valid_m & (ll >= 0) & (ll <= lj))
                    if not len(sel):
                        continue
                    th = 2.0 * ll[sel] * phi_j
                    c, s = np.cos(th), np.sin(th)
                    xr = c * x[sel] + s * y[sel]
                    yr = -s * x[sel] + c * y[sel]
                    u = (xr - (base_r + mm[sel] * aj)) / aj
                    v = yr / bj
                    hit[sel] |= (u >= 0.0) & (u <= 1.0) & (v >= -1.0) & (v <= 1.0)
        covered[todo[hit]] = True

    # exact slow pass for the rare leftovers
    left = np.flatnonzero(~covered)
    if len(left):
        cov = WavePacketCovering(spec, j_max)
        still = []
        for p in pts[left]:
            ok = False
            for k in range(len(cov)):
                u = cov.pullback(k, p[None, :])[0]
                if k == 0:
                    ok = u[0] ** 2 + u[1] ** 2 <= INNER_DISC_RADIUS ** 2
                else:
                    ok = 0.0 <= u[0] <= 1.0 and -1.0 <= u[1] <= 1.0
                if ok:
                    break
            if not ok:
                still.append(p)
        misses = np.array(still).reshape(-1, 2)
    else:
        misses = np.empty((0, 2))
    return CoverageReport(tested=sample_count, misses=misses)


# ---------------------------------------------------------------------------
# providers: uniform interface over wave packet / Besov / alpha-mod / dilated
# ---------------------------------------------------------------------------

class Provider:
    """Covering provider protocol: enumeration + per-index patch geometry."""

    name = "provider"

    def enumerate(self, trunc: int) -> list:
        raise NotImplementedError

    def patch(self, i, which: str = "outer") -> Patch:
        raise NotImplementedError

    def weight(self, i, s: float) -> float:
        raise NotImplementedError

    def safe_radius(self, trunc: int) -> float:
        """Radius within which the truncated inner sets are known to cover."""
        raise NotImplementedError

    def scale_of(self, i) -> int:
        """Coarse scale label used for per-scale reporting."""
        raise NotImplementedError

    def alpha_beta(self) -> tuple[float, float]:
        """Exponents this family purports to realize (for conformance checks)."""
        raise NotImplementedError

    def reference_angle(self, i) -> float:
        p = self.patch(i)
        c = p.map.b
        return math.atan2(c[1], c[0]) if (c[0] != 0 or c[1] != 0) else 0.0


class WavePacketProvider(Provider):
    name = "wp"

    def __init__(self, spec: CoveringSpec):
        self.spec = spec

    def enumerate(self, trunc: int) -> list[WPIndex]:
        return enumerate_indices(self.spec, trunc)

    def patch(self, i: WPIndex, which: str = "outer") -> Patch:
        return patch(i, self.spec, which)

    def weight(self, i: WPIndex, s: float) -> float:
        return weight(i, s)

    def safe_radius(self, trunc: int) -> float:
        return 2.0 ** (trunc - 1)

    def scale_of(self, i: WPIndex) -> int:
        return i.j

    def alpha_beta(self):
        return self.spec.alpha, self.spec.beta

    def reference_angle(self, i: WPIndex) -> float:
        return rotation_angle(i, self.spec)


class BesovProvider(Provider):
    """Inhomogeneous dyadic annuli: B_0 = B_4(0), B_n = B_{2^{n+2}} \\ closed B_{2^{n-2}}."""

    name = "besov"

    def enumerate(self, trunc: int) -> list[int]:
        return list(range(trunc + 1))

    def patch(self, n: int, which: str = "outer") -> Patch:
        m = AffineMap2(np.eye(2) * 2.0 ** n, np.zeros(2))
        if n == 0:
            base = Disc(4.0) if which == "outer" else Disc(3.0)
        else:
            base = Annulus(0.25, 4.0) if which == "outer" else Annulus(0.5, 2.0)
        return Patch(m, base)

    def weight(self, n: int, s: float) -> float:
        return 2.0 ** (s * n)

    def safe_radius(self, trunc: int) -> float:
        return 2.0 ** trunc

    def scale_of(self, n: int) -> int:
        return n

    def alpha_beta(self):
        return 1.0, 1.0

    def reference_angle(self, n: int) -> float:
        return 0.0


class AlphaModulationProvider(Provider):
    """Balls B_{r |k|^a0}(|k|^a0 k), k in Z^2 \\ {0}, a0 = alpha/(1-alpha).

    The radius must be large enough for the shrunk (half-radius) balls to
    still cover the plane; the default follows from the spread rate of the
    centre map and should be validated by a conformance/coverage run.
    """

    name = "amod"

    def __init__(self, alpha: float, radius: float | None = None):
        if not (0.0 <= alpha < 1.0):
            raise ValueError("alpha-modulation provider needs alpha in [0,1); "
                             "alpha = 1 is the Besov covering")
        self.alpha = alpha
        self.a0 = alpha / (1.0 - alpha)
        self.radius = radius if radius is not None else 2.2 * (1.0 + self.a0) * 2.0 ** self.a0

    def enumerate(self, trunc: int) -> list[tuple[int, int]]:
        ks = []
        for kx in range(-trunc, trunc + 1):
            for ky in range(-trunc, trunc + 1):
                if (kx, ky) != (0, 0) and kx * kx + ky * ky <= trunc * trunc:
                    ks.append((kx, ky))
        ks.sort(key=lambda k: (k[0] * k[0] + k[1] * k[1], math.atan2(k[1], k[0])))
        return ks

    def patch(self, k: tuple[int, int], which: str = "outer") -> Patch:
        kn = math.hypot(*k)
        scale = kn ** self.a0
        center = np.array([k[0] * scale, k[1] * scale])
        m = AffineMap2(np.eye(2) * (self.radius * scale), center)
        return Patch(m, Disc(1.0) if which == "outer" else Disc(0.5))

    def weight(self, k: tuple[int, int], s: float) -> float:
        return (1.0 + k[0] ** 2 + k[1] ** 2) ** (s / (2.0 * (1.0 - self.alpha)))

    def safe_radius(self, trunc: int) -> float:
        return max(0.0, (trunc - 1.0)) ** (1.0 + self.a0) / 2.0 if trunc > 1 else 0.5

    def scale_of(self, k: tuple[int, int]) -> int:
        kn = math.hypot(*k) ** (1.0 + self.a0)
        return max(0, int(math.ceil(math.log2(max(kn, 1.0)))))

    def alpha_beta(self):
        return self.alpha, self.alpha

    def reference_angle(self, k: tuple[int, int]) -> float:
        return math.atan2(k[1], k[0])


class DilatedProvider(Provider):
    """Image of another provider under xi -> B^{-t} xi."""

    name = "dilated"

    def __init__(self, inner: Provider, b_matrix: np.ndarray):
        self.inner = inner
        self.b_matrix = np.asarray(b_matrix, dtype=float)
        self.b_inv_t = np.linalg.inv(self.b_matrix).T

    def enumerate(self, trunc: int) -> list:
        return self.inner.enumerate(trunc)

    def patch(self, i, which: str = "outer") -> Patch:
        p = self.inner.patch(i, which)
        return Patch(p.map.compose_left(self.b_inv_t), p.base)

    def weight(self, i, s: float) -> float:
        return self.inner.weight(i, s)

    def safe_radius(self, trunc: int) -> float:
        return self.inner.safe_radius(trunc) / spectral_norm_2x2(self.b_matrix.T)

    def scale_of(self, i) -> int:
        return self.inner.scale_of(i)

    def alpha_beta(self):
        return self.inner.alpha_beta()

    def intersects(self, i, ip) -> bool:
        """Linear images preserve intersection exactly; delegate."""
        return patches_intersect(self.inner.patch(i), self.inner.patch(ip))


def provider_intersects(prov: Provider, i, ip) -> bool:
    if isinstance(prov, DilatedProvider):
        return prov.intersects(i, ip)
    return patches_intersect(prov.patch(i), prov.patch(ip))


# ---------------------------------------------------------------------------
# subordination profile and conformance fitting
# ---------------------------------------------------------------------------

@dataclass
class SubordinationProfile:
    max_count: int
    histogram: dict[int, int]          # |J_i| -> multiplicity
    per_scale_max: dict[int, int]      # j -> max |J_i| over indices at scale j


def subordination_profile(spec_a: CoveringSpec, spec_b: CoveringSpec,
                          j_max: int) -> SubordinationProfile:
    """|J_i| = #{i' in the spec_b covering meeting Q_i^{spec_a}}, truncated."""
    ca = WavePacketCovering(spec_a, j_max)
    cb = WavePacketCovering(spec_b, j_max)
    ia, _ = intersecting_pairs(ca, cb)
    counts = np.bincount(ia, minlength=len(ca))
    hist: dict[int, int] = {}
    for c in counts:
        hist[int(c)] = hist.get(int(c), 0) + 1
    per_scale = {j: int(counts[ca.js == j].max()) for j in range(0, j_max + 1)
                 if (ca.js == j).any()}
    return SubordinationProfile(int(counts.max()), hist, per_scale)


@dataclass
class ConformanceReport:
    c_measure: tuple[float, float]
    c_radial: float
    c_angular: float
    per_scale: dict[int, dict[str, float]]

    @property
    def ok(self) -> bool:
        vals = [self.c_measure[0], self.c_measure[1], self.c_radial, self.c_angular]
        return all(math.isfinite(v) and v > 0 for v in vals[:2]) \
            and all(math.isfinite(v) for v in vals[2:])


def alpha_beta_conformance(prov: Provider, trunc: int, samples_per_patch: int = 64,
                           seed: int = 0) -> ConformanceReport:
    """Fit implied constants of the measure/radial/angular covering conditions.

    For each patch: lambda(Q_i) / (1+|xi|)^(a+b) over sampled xi (measure),
    (r_max - r_min) / (1+r_min)^a (radial interval), and the worst polar-angle
    deviation from the patch axis divided by (1+|xi|)^(b-1) (angular).
    Constants are fitted and reported, not certified minimal.
    """
    a, b = prov.alpha_beta()
    rng = np.random.default_rng(seed)
    meas_lo, meas_hi, rad_hi, ang_hi = math.inf, 0.0, 0.0, 0.0
    per_scale: dict[int, dict[str, float]] = {}
    for i in prov.enumerate(trunc):
        p = prov.patch(i)
        area = p.area
        r_min, r_max = p.radial_range()
        pts = p.sample(samples_per_patch, rng)
        if isinstance(p.base, Rect):
            pts = np.vstack([pts, p.vertices()])
        norms = np.hypot(pts[:, 0], pts[:, 1])
        ratios = area / (1.0 + norms) ** (a + b)
        meas_lo, meas_hi = min(meas_lo, ratios.min()), max(meas_hi, ratios.max())
        rad = (r_max - r_min) / (1.0 + r_min) ** a
        rad_hi = max(rad_hi, rad)
        if isinstance(p.base, Annulus):
            dev = math.pi / 2.0  # rings have no angular localization
            ang = dev * (1.0 + r_min) ** (1.0 - b)
        else:
            phi_i = prov.reference_angle(i)
            ang_pts = np.arctan2(pts[:, 1], pts[:, 0])
            d = np.abs(np.mod(ang_pts - phi_i + math.pi / 2.0, math.pi) - math.pi / 2.0)
            ang = float(np.max(d * (1.0 + norms) ** (1.0 - b)))
        ang_hi = max(ang_hi, ang)
        sc = prov.scale_of(i)
        e = per_scale.setdefault(sc, {"measure_hi": 0.0, "measure_lo": math.inf,
                                      "radial": 0.0, "angular": 0.0})
        e["measure_hi"] = max(e["measure_hi"], float(ratios.max()))
        e["measure_lo"] = min(e["measure_lo"], float(ratios.min()))
        e["radial"] = max(e["radial"], rad)
        e["angular"] = max(e["angular"], ang)
    return ConformanceReport((meas_lo, meas_hi), rad_hi, ang_hi, per_scale)
