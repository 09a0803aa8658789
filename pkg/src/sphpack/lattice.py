"""Two-dimensional Bravais lattices at unit area per site and their
characteristic volume v_c = 1 / sum_p W(|p|, h).

A periodic arrangement with larger v_c has lower total error, so the
pattern a relaxation settles into at cut-off h is the lattice type with the
largest attainable v_c.  Lengths are in units of sqrt(area per site), i.e.
h here is h / dx.

Generators (all with |b1 x b2| = 1):

    square          (1, 0), (0, 1)
    hexagonal       (s, 0), (s/2, s sqrt(3)/2),   s^2 sqrt(3)/2 = 1
    rectangular k   (k a, 0), (0, a),              k a^2 = 1
    diamond k       (k a, 0), (k a/2, a/2),        k a^2 / 2 = 1
    parallelogram   (k, 0), (r / k, 1 / k)         base k, height 1/k, slant r
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .kernel import KernelSpec

TYPES = ("hexagonal", "square", "diamond", "rectangular", "parallelogram")
# most symmetric first: on ties the prediction reports the simpler pattern
_SPECIFICITY = ("hexagonal", "square", "rectangular", "diamond", "parallelogram")
TIE_TOLERANCE = 1e-7

K_RANGE = (1.0, 3.0)
R_RANGE = (0.0, 1.0)
GRID_STEP = 0.01
REFINE_STEP = 1e-4

_HEX_SIDE = np.sqrt(2.0 / np.sqrt(3.0))


@dataclass(frozen=True)
class LatticeSpec:
    type: str
    k: float = 1.0
    r: float = 0.0

    def __post_init__(self):
        if self.type not in TYPES:
            raise InvalidArgumentError(f"unknown lattice type {self.type!r}")
        if not self.k > 0:
            raise InvalidArgumentError("lattice ratio k must be positive")

    def generators(self):
        return _generators(self.type, np.array([self.k]), np.array([self.r]))[:, 0, :]


def _generators(kind, k, r):
    """Stacked generators, shape (2, n, 2)."""
    k = np.asarray(k, dtype=float)
    r = np.broadcast_to(np.asarray(r, dtype=float), k.shape)
    z = np.zeros_like(k)
    if kind == "square":
        b1 = np.stack([z + 1, z], -1)
        b2 = np.stack([z, z + 1], -1)
    elif kind == "hexagonal":
        s = _HEX_SIDE
        b1 = np.stack([z + s, z], -1)
        b2 = np.stack([z + s / 2, z + s * np.sqrt(3) / 2], -1)
    elif kind == "rectangular":
        a = 1 / np.sqrt(k)
        b1 = np.stack([k * a, z], -1)
        b2 = np.stack([z, a], -1)
    elif kind == "diamond":
        a = np.sqrt(2 / k)
        b1 = np.stack([k * a, z], -1)
        b2 = np.stack([k * a / 2, a / 2], -1)
    elif kind == "parallelogram":
        b1 = np.stack([k, z], -1)
        b2 = np.stack([r / k, 1 / k], -1)
    else:
        raise InvalidArgumentError(f"unknown lattice type {kind!r}")
    return np.stack([b1, b2])


def _index_bound(b1, b2, radius):
    # p = i b1 + j b2 with |p| < R  =>  |i| <= R |b2| / area, |j| <= R |b1| / area
    area = np.abs(b1[..., 0] * b2[..., 1] - b1[..., 1] * b2[..., 0])
    if np.any(area < 1e-12):
        raise InvalidArgumentError("degenerate lattice generators")
    m = radius * np.maximum(np.linalg.norm(b1, axis=-1), np.linalg.norm(b2, axis=-1)) / area
    return int(np.ceil(np.max(m)))


def lattice_points_within(spec, radius):
    """All sites p (origin included) with |p| < radius."""
    if not radius > 0:
        raise InvalidArgumentError("radius must be positive")
    b1, b2 = spec.generators()
    m = _index_bound(b1, b2, radius)
    i, j = np.meshgrid(np.arange(-m, m + 1), np.arange(-m, m + 1), indexing="ij")
    p = i.reshape(-1, 1) * b1 + j.reshape(-1, 1) * b2
    return p[np.linalg.norm(p, axis=1) < radius]


def _volumes(kind, k, r, h):
    """Vectorised v_c over parameter arrays."""
    gens = _generators(kind, k, r)
    b1, b2 = gens[0], gens[1]
    m = _index_bound(b1, b2, h)
    ij = np.arange(-m, m + 1, dtype=float)
    I, J = np.meshgrid(ij, ij, indexing="ij")
    I, J = I.ravel(), J.ravel()
    spec = KernelSpec(h, 2)
    out = np.empty(len(b1))
    for s in range(0, len(b1), 2048):
        e = slice(s, s + 2048)
        px = I[None, :] * b1[e, 0:1] + J[None, :] * b2[e, 0:1]
        py = I[None, :] * b1[e, 1:2] + J[None, :] * b2[e, 1:2]
        q = np.minimum(np.hypot(px, py) / h, 1.0)
        out[e] = 1.0 / (spec.w0 * np.sum((1 - q) ** 4 * (1 + 4 * q), axis=1))
    return out


def characteristic_volume(spec, h):
    if not h > 0:
        raise InvalidArgumentError("h must be positive")
    return float(_volumes(spec.type, [spec.k], [spec.r], h)[0])


def _refine(kind, h, k, r, v, two_d):
    k_lo, k_hi = K_RANGE
    r_lo, r_hi = R_RANGE
    step = GRID_STEP / 2
    while step >= REFINE_STEP * (1 - 1e-9):
        moved = True
        while moved:
            moved = False
            cand = [(k + step, r), (k - step, r)]
            if two_d:
                cand += [(k, r + step), (k, r - step), (k + step, r + step), (k - step, r - step),
                         (k + step, r - step), (k - step, r + step)]
            cand = [(a, b) for a, b in cand if k_lo <= a <= k_hi and r_lo <= b <= r_hi]
            vals = _volumes(kind, [a for a, _ in cand], [b for _, b in cand], h)
            best = int(np.argmax(vals))
            if vals[best] > v:
                (k, r), v = cand[best], float(vals[best])
                moved = True
        step /= 2
    return k, r, v


def fold_slant(k, r):
    """Canonical slant in [0, k^2/2]: r and r + k^2 (shift by one base vector)
    and k^2 - r (mirror image) span congruent lattices."""
    period = k * k
    r = r % period
    return float(min(r, period - r))


def _as_parallelogram(kind, k):
    """(k, r) of the parallelogram parameterisation spanning the same lattice."""
    if kind == "hexagonal":
        return _HEX_SIDE, 1 / np.sqrt(3)
    if kind == "square":
        return 1.0, 0.0
    if kind == "rectangular":
        return np.sqrt(k), 0.0
    if kind == "diamond":
        # rhombus basis: side L, slant cot(angle)
        return np.sqrt((k * k + 1) / (2 * k)), (k * k - 1) / (2 * k)
    raise InvalidArgumentError(kind)


def maximize_type(kind, h):
    """Best parameters and v_c of one lattice type at cut-off h.

    Grid search over k (and r for parallelograms) at step 0.01, then
    coordinate refinement down to 1e-4.  The parallelogram search is also
    seeded with the other four types' optima, which it contains.
    Returns (params dict, v_max).
    """
    if not h > 0:
        raise InvalidArgumentError("h must be positive")
    if kind in ("square", "hexagonal"):
        return {}, characteristic_volume(LatticeSpec(kind), h)
    ks = np.round(np.arange(K_RANGE[0], K_RANGE[1] + 1e-9, GRID_STEP), 10)
    if kind in ("rectangular", "diamond"):
        vals = _volumes(kind, ks, np.zeros_like(ks), h)
        i = int(np.argmax(vals))
        k, _, v = _refine(kind, h, ks[i], 0.0, float(vals[i]), False)
        return {"k": float(k)}, v
    if kind != "parallelogram":
        raise InvalidArgumentError(f"unknown lattice type {kind!r}")
    rs = np.round(np.arange(R_RANGE[0], R_RANGE[1] + 1e-9, GRID_STEP), 10)
    K, R = np.meshgrid(ks, rs, indexing="ij")
    vals = _volumes(kind, K.ravel(), R.ravel(), h)
    i = int(np.argmax(vals))
    k, r, v = _refine(kind, h, K.ravel()[i], R.ravel()[i], float(vals[i]), True)
    for other in ("hexagonal", "square", "rectangular", "diamond"):
        params, vo = maximize_type(other, h)
        ko, ro = _as_parallelogram(other, params.get("k", 1.0))
        if vo > v and ko >= K_RANGE[0] - 1e-9:
            k, r, v = ko, ro, vo
    return {"k": float(k), "r": fold_slant(k, r)}, v


@dataclass
class Prediction:
    h: float
    pattern: str
    params: dict
    volumes: dict = field(default_factory=dict)

    def row(self):
        v = self.volumes
        return {
            "h": self.h,
            "v_hex": v["hexagonal"],
            "v_square": v["square"],
            "v_diamond": v["diamond"],
            "v_rect": v["rectangular"],
            "v_para": v["parallelogram"],
            "pattern": self.pattern,
            "k": self.params.get("k", ""),
            "r": self.params.get("r", ""),
        }


def predict_pattern(h):
    results = {kind: maximize_type(kind, h) for kind in TYPES}
    volumes = {kind: v for kind, (_, v) in results.items()}
    vmax = max(volumes.values())
    for kind in _SPECIFICITY:
        if volumes[kind] >= vmax - TIE_TOLERANCE:
            return Prediction(float(h), kind, results[kind][0], volumes)


def prediction_table(h_min, h_max, step):
    if not (h_min > 0 and h_max >= h_min and step > 0):
        raise InvalidArgumentError("need 0 < h_min <= h_max and step > 0")
    n = int(np.floor((h_max - h_min) / step + 1e-9)) + 1
    return [predict_pattern(round(h_min + i * step, 10)) for i in range(n)]


CSV_FIELDS = ["h", "v_hex", "v_square", "v_diamond", "v_rect", "v_para", "pattern", "k", "r"]


def table_csv(rows, fh=None):
    out = fh or io.StringIO()
    w = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for p in rows:
        row = p.row()
        for key in CSV_FIELDS[1:6]:
            row[key] = f"{row[key]:.6f}"
        for key in ("k", "r"):
            if row[key] != "":
                row[key] = f"{row[key]:.4f}"
        row["h"] = f"{row['h']:g}"
        w.writerow(row)
    return out.getvalue() if fh is None else None
