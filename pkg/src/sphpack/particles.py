"""Particle storage, jittered initialisation, cell-list neighbour search and
per-particle volume / volume-fraction evaluation."""

import csv
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import EmptyDomainError, InvalidArgumentError
from .kernel import kernel_value


@dataclass(eq=False)
class ParticleSet:
    """N positions filling a domain of total volume ``domain_volume``.

    ``box`` and ``periodic`` describe a periodic cell [0, Lx) x [0, Ly); an
    axis flagged non-periodic is treated as open.  ``box=None`` is fully open.
    """

    positions: np.ndarray
    domain_volume: float
    box: tuple = None
    periodic: tuple = (False, False)

    def __post_init__(self):
        self.positions = np.array(self.positions, dtype=float).reshape(-1, 2)
        if len(self.positions) < 1:
            raise InvalidArgumentError("a particle set needs at least one particle")
        if not self.domain_volume > 0:
            raise InvalidArgumentError("domain volume must be positive")
        if self.box is not None:
            self.box = (float(self.box[0]), float(self.box[1]))
        self.periodic = tuple(bool(p) for p in self.periodic)
        if any(self.periodic) and self.box is None:
            raise InvalidArgumentError("periodic axes need a box")

    @property
    def n(self):
        return len(self.positions)

    @property
    def reference_volume(self):
        return self.domain_volume / self.n

    v0 = reference_volume

    @property
    def effective_spacing(self):
        return np.sqrt(self.reference_volume)

    def copy(self):
        return ParticleSet(self.positions.copy(), self.domain_volume, self.box, self.periodic)

    def wrap(self):
        """Fold periodic coordinates back into the box, in place."""
        for axis in (0, 1):
            if self.periodic[axis]:
                self.positions[:, axis] %= self.box[axis]
        return self

    def displacement(self, a, b):
        """Minimum-image a - b."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        for axis in (0, 1):
            if self.periodic[axis]:
                L = self.box[axis]
                d[..., axis] -= L * np.round(d[..., axis] / L)
        return d


def _jitter(centers, spacing, jitter_fraction, seed):
    if not 0 <= jitter_fraction <= 0.5:
        raise InvalidArgumentError("jitter_fraction must lie in [0, 0.5]")
    rng = np.random.default_rng(seed)
    shift = rng.uniform(-jitter_fraction * spacing, jitter_fraction * spacing, size=centers.shape)
    return centers + shift


def initialize_jittered(domain, spacing, jitter_fraction=0.25, seed=0, *, extent=None, volume=None):
    """One particle per background cell inside the domain, randomly displaced.

    ``domain`` is either a level-set (anything with ``interpolate``) or a box
    ``(Lx, Ly)`` for a fully periodic run.  For a level-set, ``extent`` is
    ``((x0, y0), (x1, y1))`` of the cell region; it defaults to the field's
    node range.  ``volume`` overrides the domain volume used for v0; by
    default it is the count of inside cells times spacing^2 for a level-set
    and Lx*Ly for a box.
    """
    if not spacing > 0:
        raise InvalidArgumentError("spacing must be positive")
    if hasattr(domain, "interpolate"):
        if extent is None:
            extent = (domain.origin, domain.upper)
        lo, hi = np.asarray(extent[0], float), np.asarray(extent[1], float)
        nx, ny = np.floor((hi - lo) / spacing + 1e-9).astype(int)
        cx = lo[0] + spacing * (np.arange(nx) + 0.5)
        cy = lo[1] + spacing * (np.arange(ny) + 0.5)
        X, Y = np.meshgrid(cx, cy, indexing="ij")
        centers = np.stack([X.ravel(), Y.ravel()], axis=1)
        centers = centers[domain.interpolate(centers) <= 0.0]
        if len(centers) == 0:
            raise EmptyDomainError("no cell centre lies inside the domain")
        if volume is None:
            volume = len(centers) * spacing**2
        pos = _jitter(centers, spacing, jitter_fraction, seed)
        return ParticleSet(pos, volume)

    Lx, Ly = (float(v) for v in domain)
    nx, ny = int(round(Lx / spacing)), int(round(Ly / spacing))
    if nx < 1 or ny < 1:
        raise EmptyDomainError("box smaller than one cell")
    cx = spacing * (np.arange(nx) + 0.5)
    cy = spacing * (np.arange(ny) + 0.5)
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    centers = np.stack([X.ravel(), Y.ravel()], axis=1)
    pos = _jitter(centers, spacing, jitter_fraction, seed)
    ps = ParticleSet(pos, Lx * Ly if volume is None else volume, (Lx, Ly), (True, True))
    return ps.wrap()


# ---------------------------------------------------------------------------
# cell list


@numba.njit(cache=True)
def _min_image(d, L, periodic):
    if periodic:
        half = 0.5 * L
        if d > half:
            d -= L
        elif d < -half:
            d += L
    return d


@numba.njit(cache=True)
def _cell_pairs(pos, order, start, count, ncx, ncy, L, per, h2, pi, pj, pdx, pdy, pr):
    """Half-stencil sweep over cells; fills pair arrays and returns the pair
    count, or -1 if capacity ran out.  Needs >= 3 cells on periodic axes."""
    cap = pi.shape[0]
    sx = np.empty(order.shape[0])
    sy = np.empty(order.shape[0])
    for k in range(order.shape[0]):
        sx[k] = pos[order[k], 0]
        sy[k] = pos[order[k], 1]
    m = 0
    for cx in range(ncx):
        for cy in range(ncy):
            c = cx * ncy + cy
            for ka in range(start[c], start[c] + count[c]):
                xa = sx[ka]
                ya = sy[ka]
                # own cell (later entries) then four forward neighbours
                for nb in range(5):
                    if nb == 0:
                        nx_, ny_ = cx, cy
                    elif nb == 1:
                        nx_, ny_ = cx + 1, cy - 1
                    elif nb == 2:
                        nx_, ny_ = cx + 1, cy
                    elif nb == 3:
                        nx_, ny_ = cx + 1, cy + 1
                    else:
                        nx_, ny_ = cx, cy + 1
                    if nx_ < 0 or nx_ >= ncx:
                        if not per[0]:
                            continue
                        nx_ = nx_ % ncx
                    if ny_ < 0 or ny_ >= ncy:
                        if not per[1]:
                            continue
                        ny_ = ny_ % ncy
                    d = nx_ * ncy + ny_
                    kb0 = ka + 1 if nb == 0 else start[d]
                    for kb in range(kb0, start[d] + count[d]):
                        dx = _min_image(xa - sx[kb], L[0], per[0])
                        dy = _min_image(ya - sy[kb], L[1], per[1])
                        r2 = dx * dx + dy * dy
                        if r2 < h2:
                            if m >= cap:
                                return -1
                            i = order[ka]
                            j = order[kb]
                            # store with i < j and d = x_i - x_j
                            if i > j:
                                i, j = j, i
                                dx, dy = -dx, -dy
                            pi[m] = i
                            pj[m] = j
                            pdx[m] = dx
                            pdy[m] = dy
                            pr[m] = np.sqrt(r2)
                            m += 1
    return m


@numba.njit(cache=True)
def _brute_pairs(pos, L, per, h2, pi, pj, pdx, pdy, pr):
    n = pos.shape[0]
    cap = pi.shape[0]
    m = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = _min_image(pos[i, 0] - pos[j, 0], L[0], per[0])
            dy = _min_image(pos[i, 1] - pos[j, 1], L[1], per[1])
            r2 = dx * dx + dy * dy
            if r2 < h2:
                if m >= cap:
                    return -1
                pi[m] = i
                pj[m] = j
                pdx[m] = dx
                pdy[m] = dy
                pr[m] = np.sqrt(r2)
                m += 1
    return m


@dataclass(eq=False)
class NeighborGrid:
    """Fixed-radius pair finder.

    After :meth:`rebuild`, ``pi, pj`` hold every unordered pair with
    ``pi < pj`` and separation below ``cutoff``; ``dx, dy`` are the
    minimum-image components of ``x[pi] - x[pj]`` and ``r`` their norm.
    """

    cutoff: float
    box: tuple = None
    periodic: tuple = (False, False)
    pi: np.ndarray = field(default=None, repr=False)
    pj: np.ndarray = field(default=None, repr=False)
    dx: np.ndarray = field(default=None, repr=False)
    dy: np.ndarray = field(default=None, repr=False)
    r: np.ndarray = field(default=None, repr=False)
    n: int = 0
    _capacity: int = field(default=0, repr=False)

    def __post_init__(self):
        if not self.cutoff > 0:
            raise InvalidArgumentError("cutoff must be positive")
        self.periodic = tuple(bool(p) for p in self.periodic)
        for axis in (0, 1):
            if self.periodic[axis] and self.box[axis] <= 2 * self.cutoff:
                raise InvalidArgumentError("periodic box must exceed twice the cutoff")

    @classmethod
    def for_particles(cls, particles, cutoff):
        return cls(cutoff, particles.box, particles.periodic)

    def rebuild(self, particles):
        pos = particles.positions if isinstance(particles, ParticleSet) else np.asarray(particles, float)
        pos = np.ascontiguousarray(pos, dtype=float)
        self.n = len(pos)
        per = np.array(self.periodic, dtype=np.bool_)
        L = np.array(self.box if self.box is not None else (1.0, 1.0), dtype=float)
        h2 = self.cutoff**2

        lo = pos.min(axis=0)
        hi = pos.max(axis=0)
        size = np.empty(2)
        for axis in (0, 1):
            if per[axis]:
                lo[axis] = 0.0
                size[axis] = L[axis]
            else:
                size[axis] = max(hi[axis] - lo[axis], 0.0) + 1e-12
        ncell = np.maximum(np.floor(size / self.cutoff).astype(np.int64), 1)
        # periodic wrap-around stencil needs >= 3 cells, or neighbours repeat
        brute = any(per[a] and ncell[a] < 3 for a in (0, 1))
        ncell = np.minimum(ncell, 2048)
        cell = size / ncell

        if not brute:
            idx = np.minimum(np.maximum(((pos - lo) / cell).astype(np.int64), 0), ncell - 1)
            cid = idx[:, 0] * ncell[1] + idx[:, 1]
            order = np.argsort(cid, kind="stable")
            count = np.bincount(cid, minlength=ncell[0] * ncell[1])
            start = np.concatenate(([0], np.cumsum(count)[:-1]))
        cap = max(self._capacity, 64)
        while True:
            arrays = (np.empty(cap, np.int64), np.empty(cap, np.int64), np.empty(cap), np.empty(cap), np.empty(cap))
            if brute:
                m = _brute_pairs(pos, L, per, h2, *arrays)
            else:
                m = _cell_pairs(pos, order, start, count, ncell[0], ncell[1], L, per, h2, *arrays)
            if m >= 0:
                break
            cap *= 2
        self._capacity = max(cap, int(1.25 * m))
        self.pi, self.pj, self.dx, self.dy, self.r = (a[:m] for a in arrays)
        return self

    def ordered_pairs(self):
        """Every ordered (i, j), i != j, within the cutoff, each exactly once."""
        return np.concatenate([self.pi, self.pj]), np.concatenate([self.pj, self.pi])

    def neighbor_counts(self):
        return np.bincount(self.pi, minlength=self.n) + np.bincount(self.pj, minlength=self.n)


def rebuild(grid, particles):
    return grid.rebuild(particles)


def brute_force_pairs(positions, cutoff, box=None, periodic=(False, False)):
    """O(N^2) reference pair set {(i, j): i < j, |x_i - x_j| < cutoff}."""
    pos = np.asarray(positions, dtype=float)
    d = pos[:, None, :] - pos[None, :, :]
    for axis in (0, 1):
        if periodic[axis]:
            L = box[axis]
            d[..., axis] -= L * np.round(d[..., axis] / L)
    r = np.linalg.norm(d, axis=-1)
    i, j = np.nonzero(np.triu(r < cutoff, k=1))
    return set(zip(i.tolist(), j.tolist()))


# ---------------------------------------------------------------------------
# volumes and fractions


def kernel_sums(particles, grid, spec):
    """Sum_j W(|x_i - x_j|) per particle, self term included."""
    w = kernel_value(grid.r, spec)
    n = particles.n
    return spec.w0 + np.bincount(grid.pi, w, minlength=n) + np.bincount(grid.pj, w, minlength=n)


def particle_volumes(particles, grid, spec):
    return 1.0 / kernel_sums(particles, grid, spec)


def particle_volume(i, particles, grid, spec):
    mask = (grid.pi == i) | (grid.pj == i)
    return 1.0 / (spec.w0 + np.sum(kernel_value(grid.r[mask], spec)))


def particle_based_fraction(x, particles, spec):
    """alpha(x) = sum_j W(|x - x_j|) v0 at one or more query points."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    pos = particles.positions
    out = np.empty(len(x))
    # chunked dense evaluation; query sets here are modest
    for start in range(0, len(x), 256):
        q = x[start:start + 256]
        d = particles.displacement(q[:, None, :], pos[None, :, :])
        out[start:start + 256] = kernel_value(np.linalg.norm(d, axis=-1), spec).sum(axis=1)
    out *= particles.reference_volume
    return out


def mean_volumes(volumes):
    """(arithmetic mean, harmonic mean, max) of a volume array."""
    v = np.asarray(volumes, dtype=float)
    return float(v.mean()), float(len(v) / np.sum(1.0 / v)), float(v.max())


def write_particles_csv(path, particles, volumes, phi=None):
    if phi is None:
        phi = np.full(particles.n, np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "volume", "phi"])
        for (x, y), v, p in zip(particles.positions, volumes, phi):
            w.writerow([f"{x:.17g}", f"{y:.17g}", f"{v:.17g}", f"{p:.17g}"])


def read_particles_csv(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return np.stack([data["x"], data["y"]], axis=1), data["volume"], data["phi"]
