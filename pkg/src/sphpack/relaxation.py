"""Total-error functional, its gradients, and the relaxation drivers.

The objective for N particles of reference volume v0 = V/N is

    E = v0^2 sum_ij W(|x_i - x_j|) - V + 2 v0 sum_i B(phi_i)

with B the boundary integral (absent in a periodic box).  The pair sum
includes i == j.  Gradient descent moves every particle along
U_i = -dE/dx_i, scaled so that the fastest particle travels exactly c h.
"""

import logging
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.spatial import cKDTree

from .errors import DivergenceError, InvalidArgumentError
from .kernel import (
    boundary_integral_extended,
    kernel_value,
    smoothed_fraction,
    w1_value,
)
from .particles import NeighborGrid, particle_based_fraction

log = logging.getLogger(__name__)

# Default Litvinov damping in units of the time step.  mu / dt is invariant
# under rescaling lengths; below ~3 the inertial scheme heats up, above ~5
# the explicit viscous update overshoots.
MU_PER_DT = 3.5

SCHEMES = ("gradient_descent", "litvinov", "gradient_descent_with_surface_bounding")


@dataclass
class RelaxationConfig:
    kernel: object
    field: object = None  # None: periodic box; otherwise a level-set
    scheme: str = "gradient_descent"
    c: float = 0.01
    max_steps: int = 20000
    mu: float = None  # litvinov viscosity; None -> MU_PER_DT * dt
    dt: float = None  # litvinov only; None -> 0.25 sqrt(h / max|a|) at step 0, then held
    surface_spacing: float = None  # projection depth unit for surface bounding
    threshold: float = 1e-10
    window: int = 100
    trace_stride: int = 1
    divergence_factor: float = 10.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidArgumentError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.c > 0:
            raise InvalidArgumentError("step coefficient c must be positive")
        if self.max_steps < 0 or self.trace_stride < 1 or self.window < 1:
            raise InvalidArgumentError("max_steps, trace_stride and window must be positive")
        spacing = getattr(self.field, "spacing", None)
        if spacing is not None and self.kernel.cutoff <= 2.0 * spacing:
            log.warning("h = %.3g <= 2 dx = %.3g: boundary term loses accuracy", self.kernel.cutoff, 2 * spacing)

    @property
    def bounded(self):
        return self.field is not None


@dataclass
class TraceRecord:
    step: int
    E: float
    max_U: float
    max_phi: float


@dataclass
class EnergyTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    coincident_pairs: int = 0

    def append(self, rec):
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    @property
    def steps(self):
        return np.array([r.step for r in self.records])

    @property
    def energies(self):
        return np.array([r.E for r in self.records])

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("step,E,max_U,max_phi\n")
            for r in self.records:
                fh.write(f"{r.step},{r.E:.17g},{r.max_U:.17g},{r.max_phi:.17g}\n")


# ---------------------------------------------------------------------------
# functional


def error_density(x, particles, field, spec):
    """e(x) = alpha(x) - P(-phi(x)); pass field=None for the unbounded case."""
    alpha = particle_based_fraction(x, particles, spec)
    if field is None:
        return alpha - 1.0
    return alpha - smoothed_fraction(field.interpolate(np.atleast_2d(x)), spec)


def _grid(particles, spec, grid):
    if grid is None:
        grid = NeighborGrid.for_particles(particles, spec.cutoff)
        grid.rebuild(particles)
    return grid


def pair_energy(particles, grid, spec):
    v0 = particles.reference_volume
    return v0 * v0 * (particles.n * spec.w0 + 2.0 * np.sum(kernel_value(grid.r, spec)))


def boundary_energy(phi, spec, v0):
    return 2.0 * v0 * np.sum(boundary_integral_extended(phi, spec))


def total_error(particles, field, spec, grid=None):
    grid = _grid(particles, spec, grid)
    E = pair_energy(particles, grid, spec) - particles.domain_volume
    if field is not None:
        E += boundary_energy(field.interpolate(particles.positions), spec, particles.reference_volume)
    return float(E)


@numba.njit(cache=True)
def _pair_sums(pi, pj, dx, dy, r, n, h, w0, scale):
    """Pair kernel sum and force accumulation in one pass.

    Returns (sum_{i<j} W, U, coincident) with U_i = scale sum_j W'(r) e_ij.
    """
    U = np.zeros((n, 2))
    wsum = 0.0
    coincident = 0
    dcoef = -20.0 * w0 / h
    for m in range(pi.shape[0]):
        q = r[m] / h
        if q >= 1.0:
            continue
        t = 1.0 - q
        t3 = t * t * t
        wsum += w0 * t3 * t * (1.0 + 4.0 * q)
        if r[m] == 0.0:
            coincident += 1
            continue
        # W'(r) e_ij with e_ij = -(dx, dy)/r
        f = -scale * dcoef * q * t3 / r[m]
        i = pi[m]
        j = pj[m]
        U[i, 0] += f * dx[m]
        U[i, 1] += f * dy[m]
        U[j, 0] -= f * dx[m]
        U[j, 1] -= f * dy[m]
    return wsum, U, coincident


def interior_forces(particles, grid, spec):
    """U_i = 2 v0^2 sum_{j != i} W'(r_ij) e_ij for all i; returns (U, n_coincident)."""
    v0 = particles.reference_volume
    _, U, coincident = _pair_sums(grid.pi, grid.pj, grid.dx, grid.dy, grid.r, particles.n,
                                  spec.cutoff, spec.w0, 2.0 * v0 * v0)
    if coincident:
        log.warning("%d coincident particle pairs dropped from the force sum", coincident)
    return U, coincident


def interior_gradient(i, particles, grid, spec):
    U, _ = interior_forces(particles, grid, spec)
    return U[i]


def boundary_force(phi, n, spec, v0):
    """Inward confining force -2 W1(max(-phi, 0)) v0 n (vectorised over rows)."""
    phi = np.asarray(phi, dtype=float)
    mag = 2.0 * v0 * w1_value(np.maximum(-phi, 0.0), spec)
    return -np.asarray(mag)[..., None] * np.asarray(n, dtype=float)


def boundary_forces(positions, field, spec, v0, phi=None):
    if phi is None:
        phi = field.interpolate(positions)
    U = np.zeros((len(positions), 2))
    near = phi > -spec.cutoff
    if np.any(near):
        U[near] = boundary_force(phi[near], field.normal(positions[near]), spec, v0)
    return U


def bounded_gradient(i, particles, grid, field, spec):
    U = interior_gradient(i, particles, grid, spec)
    x = particles.positions[i]
    phi = field.interpolate(x)
    if phi <= -spec.cutoff:
        return U
    return U + boundary_force(phi, field.normal(x), spec, particles.reference_volume)


@dataclass
class Evaluation:
    E: float
    U: np.ndarray
    phi: np.ndarray
    coincident: int


def evaluate(particles, spec, field=None, grid=None):
    """Energy and descent direction at the current positions (rebuilds the grid)."""
    grid = _grid(particles, spec, None) if grid is None else grid.rebuild(particles)
    v0 = particles.reference_volume
    wsum, U, coincident = _pair_sums(grid.pi, grid.pj, grid.dx, grid.dy, grid.r, particles.n,
                                     spec.cutoff, spec.w0, 2.0 * v0 * v0)
    if coincident:
        log.warning("%d coincident particle pairs dropped from the force sum", coincident)
    E = v0 * v0 * (particles.n * spec.w0 + 2.0 * wsum) - particles.domain_volume
    phi = None
    if field is not None:
        v0 = particles.reference_volume
        phi = field.interpolate(particles.positions)
        E += boundary_energy(phi, spec, v0)
        U += boundary_forces(particles.positions, field, spec, v0, phi)
    return Evaluation(float(E), U, phi, coincident)


# ---------------------------------------------------------------------------
# update schemes


class RelaxState:
    """Mutable run state shared by the step functions."""

    def __init__(self, particles, config):
        self.particles = particles.copy()
        self.config = config
        self.grid = NeighborGrid.for_particles(self.particles, config.kernel.cutoff)
        self.velocities = np.zeros_like(self.particles.positions)
        self.step = 0
        self.coincident = 0
        self.dt = config.dt


# forces below this fraction of the natural pair-force scale are round-off
FORCE_FLOOR = 1e-12


def force_scale(particles, spec, bounded=False):
    """Order of magnitude of one pair (or wall) force: 2 v0^2 W(0) / h."""
    v0 = particles.reference_volume
    scale = 2.0 * v0 * v0 * spec.w0 / spec.cutoff
    if bounded:
        scale = max(scale, 2.0 * v0 * w1_value(0.0, spec))
    return scale


def _negligible(umax, particles, cfg):
    return umax <= FORCE_FLOOR * force_scale(particles, cfg.kernel, cfg.bounded)


def _max_phi(ev):
    return float(np.max(ev.phi)) if ev.phi is not None else float("nan")


def step_present(state, ev=None):
    """One pseudo-force step x += U c h / max|U|.

    Returns the trace record of the pre-step state, or None (no move) when
    every force vanishes to round-off.
    """
    cfg = state.config
    p = state.particles
    if ev is None:
        ev = evaluate(p, cfg.kernel, cfg.field, state.grid)
    state.coincident += ev.coincident
    umax = float(np.max(np.linalg.norm(ev.U, axis=1)))
    rec = TraceRecord(state.step, ev.E, umax, _max_phi(ev))
    if _negligible(umax, p, cfg):
        return None
    p.positions += ev.U * (cfg.c * cfg.kernel.cutoff / umax)
    p.wrap()
    state.step += 1
    return rec


@numba.njit(cache=True)
def _viscous_sums(pi, pj, r, vel, h, w0, scale):
    """a_i += scale sum_j W'(r) (u_i - u_j) / r over the pair list."""
    a = np.zeros(vel.shape)
    dcoef = -20.0 * w0 / h
    for m in range(pi.shape[0]):
        q = r[m] / h
        if q >= 1.0 or r[m] == 0.0:
            continue
        t = 1.0 - q
        f = scale * dcoef * q * t * t * t / r[m]
        i = pi[m]
        j = pj[m]
        for k in range(2):
            du = f * (vel[i, k] - vel[j, k])
            a[i, k] += du
            a[j, k] -= du
    return a


def litvinov_acceleration(particles, velocities, grid, spec, mu):
    """Repulsive pair force plus the pairwise viscous term, both scaled by v0^2."""
    a, _ = interior_forces(particles, grid, spec)
    if mu:
        v0 = particles.reference_volume
        a += _viscous_sums(grid.pi, grid.pj, grid.r, velocities, spec.cutoff, spec.w0, mu * v0 * v0)
    return a


def step_litvinov(state, ev=None):
    cfg = state.config
    p = state.particles
    spec = cfg.kernel
    if ev is None:
        ev = evaluate(p, spec, cfg.field, state.grid)
    state.coincident += ev.coincident
    if state.dt is None:
        # a time step that tracks the shrinking forces keeps growing and
        # pumps kinetic energy in, so it is fixed from the step-0 forces
        amax = float(np.max(np.linalg.norm(ev.U, axis=1)))
        if _negligible(amax, p, cfg):
            return None
        state.dt = 0.25 * np.sqrt(spec.cutoff / amax)
    dt = state.dt
    mu = cfg.mu if cfg.mu is not None else MU_PER_DT * dt
    a = litvinov_acceleration(p, state.velocities, state.grid, spec, mu)
    if cfg.field is not None:
        a += boundary_forces(p.positions, cfg.field, spec, p.reference_volume, ev.phi)
    amax = float(np.max(np.linalg.norm(a, axis=1)))
    rec = TraceRecord(state.step, ev.E, amax, _max_phi(ev))
    if _negligible(amax, p, cfg) and not np.any(state.velocities):
        return None
    p.positions += state.velocities * dt + 0.5 * a * dt * dt
    state.velocities += a * dt
    p.wrap()
    state.step += 1
    return rec


def surface_bound_project(particles, field, dx):
    """Pull particles with phi > -dx/2 back onto phi = -dx/2 along the normal."""
    x = particles.positions
    phi = field.interpolate(x)
    out = phi > -0.5 * dx
    if np.any(out):
        n = field.normal(x[out])
        x[out] -= (phi[out] + 0.5 * dx)[:, None] * n
    return particles


def step_surface_bounding(state, ev=None):
    cfg = state.config
    p = state.particles
    spec = cfg.kernel
    if ev is None:
        state.grid.rebuild(p)
        U, coincident = interior_forces(p, state.grid, spec)
        E = pair_energy(p, state.grid, spec) - p.domain_volume
        phi = cfg.field.interpolate(p.positions)
        E += boundary_energy(phi, spec, p.reference_volume)
        ev = Evaluation(float(E), U, phi, coincident)
    state.coincident += ev.coincident
    umax = float(np.max(np.linalg.norm(ev.U, axis=1)))
    rec = TraceRecord(state.step, ev.E, umax, _max_phi(ev))
    if _negligible(umax, p, cfg):
        return None
    p.positions += ev.U * (cfg.c * spec.cutoff / umax)
    dx = cfg.surface_spacing or getattr(cfg.field, "spacing", p.effective_spacing)
    surface_bound_project(p, cfg.field, dx)
    p.wrap()
    state.step += 1
    return rec


_STEPPERS = {
    "gradient_descent": step_present,
    "litvinov": step_litvinov,
    "gradient_descent_with_surface_bounding": step_surface_bounding,
}


def relax(particles, config, callback=None):
    """Iterate the configured scheme; returns (final particles, EnergyTrace).

    Stops after ``max_steps`` or once the relative energy drop over the last
    ``window`` steps falls below ``threshold``.  ``callback(state, record)``
    is called after every step.
    """
    if config.scheme == "gradient_descent_with_surface_bounding" and config.field is None:
        raise InvalidArgumentError("surface bounding needs a bounded domain")
    stepper = _STEPPERS[config.scheme]
    state = RelaxState(particles, config)
    trace = EnergyTrace()
    history = []
    E0 = None
    while state.step < config.max_steps:
        rec = stepper(state)
        if rec is None:
            trace.converged = True
            break
        if E0 is None:
            E0 = rec.E
        if rec.step % config.trace_stride == 0:
            trace.append(rec)
        if callback is not None:
            callback(state, rec)
        if E0 > 0 and rec.E > config.divergence_factor * E0:
            raise DivergenceError(f"total error grew from {E0:.6g} to {rec.E:.6g} at step {rec.step}")
        history.append(rec.E)
        if len(history) > config.window:
            old = history[-config.window - 1]
            if old != 0 and abs(old - rec.E) <= config.threshold * abs(old):
                trace.converged = True
                break
    final = evaluate(state.particles, config.kernel, config.field, state.grid)
    last = TraceRecord(state.step, final.E, float(np.max(np.linalg.norm(final.U, axis=1))), _max_phi(final))
    if not trace.records or trace.records[-1].step != last.step:
        trace.append(last)
    trace.coincident_pairs = state.coincident
    return state.particles, trace


# ---------------------------------------------------------------------------
# diagnostics


def _tree(positions, box=None, periodic=(False, False)):
    boxsize = None
    if box is not None and any(periodic):
        boxsize = [box[a] if periodic[a] else 0.0 for a in (0, 1)]
    return cKDTree(positions, boxsize=boxsize)


def bond_order(positions, l=6, *, box=None, periodic=(False, False), mask=None, k=None):
    """Mean local l-fold bond order |sum_j exp(i l theta_ij)| / n_j.

    Neighbours are the k = l nearest, widened to close a tied distance shell
    so the result does not depend on tie-breaking in perfect lattices.
    Particles with fewer than k neighbours are skipped.
    """
    pos = np.asarray(positions, dtype=float)
    k = l if k is None else k
    idx = np.arange(len(pos)) if mask is None else np.flatnonzero(mask)
    if len(idx) == 0:
        raise InvalidArgumentError("bond order needs at least one particle")
    if len(pos) <= k:
        return float("nan")
    tree = _tree(pos, box, periodic)
    kq = min(len(pos), 2 * k + 3)
    dist, nb = tree.query(pos[idx], kq)
    values = []
    for row, (d, j) in enumerate(zip(dist, nb)):
        d, j = d[1:], j[1:]
        ok = np.isfinite(d)
        d, j = d[ok], j[ok]
        if len(d) < k:
            continue
        take = d <= d[k - 1] * (1 + 1e-6)
        rij = pos[j[take]] - pos[idx[row]]
        for a in (0, 1):
            if box is not None and periodic[a]:
                rij[:, a] -= box[a] * np.round(rij[:, a] / box[a])
        theta = np.arctan2(rij[:, 1], rij[:, 0])
        values.append(np.abs(np.mean(np.exp(1j * l * theta))))
    return float(np.mean(values)) if values else float("nan")


def hexatic_order(positions, mask=None, *, box=None, periodic=(False, False)):
    return bond_order(positions, 6, box=box, periodic=periodic, mask=mask)


def tetratic_order(positions, mask=None, *, box=None, periodic=(False, False)):
    return bond_order(positions, 4, box=box, periodic=periodic, mask=mask)


def particle_order(particles, l=6, mask=None):
    return bond_order(particles.positions, l, box=particles.box, periodic=particles.periodic, mask=mask)


def first_layer_distance(particles, field, dx, gap=0.25):
    """Mean |phi| of the outermost particle layer, or None if none is found.

    The layer is the run of sorted phi values (descending from the maximum)
    that ends at the first gap wider than ``gap * dx``; without such a gap
    the band phi in (-0.75 dx, 0] is used.
    """
    phi = np.sort(field.interpolate(particles.positions))[::-1]
    near = phi[phi > -1.5 * dx]
    if len(near) == 0:
        return None
    jumps = np.flatnonzero(-np.diff(near) > gap * dx)
    if len(jumps):
        layer = near[: jumps[0] + 1]
    else:
        layer = near[(near > -0.75 * dx) & (near <= 0)]
        if len(layer) == 0:
            return None
    return float(np.mean(np.abs(layer)))
