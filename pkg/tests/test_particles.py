import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad
from scipy.spatial import cKDTree

from sphpack.errors import EmptyDomainError, InvalidArgumentError
from sphpack.geometry import Circle, HalfPlane, sample_to_grid
from sphpack.kernel import KernelSpec, kernel_value
from sphpack.particles import (
    NeighborGrid,
    ParticleSet,
    brute_force_pairs,
    initialize_jittered,
    kernel_sums,
    mean_volumes,
    particle_based_fraction,
    particle_volume,
    particle_volumes,
    read_particles_csv,
    rebuild,
    write_particles_csv,
)


def _pairs(grid):
    return set(zip(grid.pi.tolist(), grid.pj.tolist()))


def test_particle_set_basics():
    p = ParticleSet(np.zeros((4, 2)) + [[0, 0], [1, 0], [0, 1], [1, 1]], 2.0)
    assert p.n == 4
    assert p.reference_volume == p.v0 == 0.5
    assert p.effective_spacing**2 == pytest.approx(p.reference_volume, rel=1e-15)


def test_particle_set_validation():
    with pytest.raises(InvalidArgumentError):
        ParticleSet(np.zeros((0, 2)), 1.0)
    with pytest.raises(InvalidArgumentError):
        ParticleSet(np.zeros((3, 2)), 0.0)
    with pytest.raises(InvalidArgumentError):
        ParticleSet(np.zeros((3, 2)), 1.0, periodic=(True, False))


def test_wrap_and_displacement():
    p = ParticleSet([[1.2, -0.1], [0.5, 0.5]], 1.0, (1.0, 1.0), (True, False))
    p.wrap()
    np.testing.assert_allclose(p.positions[0], [0.2, -0.1])
    np.testing.assert_allclose(p.displacement([0.95, 0.0], [0.05, 0.9]), [-0.1, -0.9])


def test_circle_initialisation_count():
    f = sample_to_grid(Circle((0.5, 0.5), 0.2), (0, 0), 1 / 256, 257, 257)
    p = initialize_jittered(f, 1 / 256, 0.25, seed=1)
    assert abs(p.n - 8186) <= 0.01 * 8186
    assert np.all(f.interpolate(p.positions) <= 0.25 * np.sqrt(2) / 256 + 1e-12)
    q = initialize_jittered(f, 1 / 256, 0.0, seed=1)
    assert q.n == p.n


def test_bounded_initialisation_keeps_cell_centres_inside():
    f = sample_to_grid(Circle((0.5, 0.5), 0.2), (0, 0), 1 / 64, 65, 65)
    p = initialize_jittered(f, 1 / 64, 0.0, seed=0)
    assert np.all(f.interpolate(p.positions) <= 0)
    assert p.domain_volume == pytest.approx(p.n / 64**2)
    v = initialize_jittered(f, 1 / 64, 0.0, seed=0, volume=np.pi * 0.04)
    assert v.domain_volume == pytest.approx(np.pi * 0.04)


def test_zero_jitter_gives_square_lattice():
    n = 16
    p = initialize_jittered((1.0, 1.0), 1 / n, 0.0, seed=3)
    assert p.n == n * n
    assert p.periodic == (True, True)
    cells = np.round(p.positions * n - 0.5)
    np.testing.assert_allclose(p.positions * n - 0.5, cells, atol=1e-12)
    assert len({tuple(c) for c in cells}) == n * n


def test_jitter_is_bounded_and_deterministic():
    a = initialize_jittered((1.0, 1.0), 0.1, 0.3, seed=11)
    b = initialize_jittered((1.0, 1.0), 0.1, 0.3, seed=11)
    c = initialize_jittered((1.0, 1.0), 0.1, 0.3, seed=12)
    np.testing.assert_array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)
    base = initialize_jittered((1.0, 1.0), 0.1, 0.0, seed=11).positions
    d = a.displacement(a.positions, base)
    assert np.all(np.abs(d) <= 0.03 + 1e-12)


def test_initialisation_errors():
    f = sample_to_grid(HalfPlane((0, -5), (0, 1)), (0, 0), 0.1, 11, 11)
    with pytest.raises(EmptyDomainError):
        initialize_jittered(f, 0.1)
    with pytest.raises(InvalidArgumentError):
        initialize_jittered((1.0, 1.0), 0.1, jitter_fraction=0.6)
    with pytest.raises(InvalidArgumentError):
        initialize_jittered((1.0, 1.0), -0.1)


def test_pair_at_cutoff_edges():
    h = 0.1
    for d, expect in ((0.99 * h, 1), (1.01 * h, 0)):
        p = ParticleSet([[0.3, 0.3], [0.3 + d, 0.3]], 1.0)
        g = NeighborGrid.for_particles(p, h).rebuild(p)
        assert len(g.pi) == expect


@pytest.mark.parametrize("periodic", [(False, False), (True, True), (True, False), (False, True)])
def test_matches_brute_force(periodic):
    rng = np.random.default_rng(7)
    pos = rng.uniform(0, 1, (500, 2))
    box = (1.0, 1.0)
    h = 0.07
    p = ParticleSet(pos, 1.0, box, periodic)
    g = rebuild(NeighborGrid.for_particles(p, h), p)
    assert _pairs(g) == brute_force_pairs(pos, h, box, periodic)
    d = p.displacement(pos[g.pi], pos[g.pj])
    np.testing.assert_allclose(np.stack([g.dx, g.dy], 1), d, atol=1e-15)
    np.testing.assert_allclose(g.r, np.linalg.norm(d, axis=1), rtol=1e-15)


def test_matches_kdtree_oracle_periodic():
    rng = np.random.default_rng(9)
    pos = rng.uniform(0, 2, (1000, 2))
    p = ParticleSet(pos, 4.0, (2.0, 2.0), (True, True))
    g = NeighborGrid.for_particles(p, 0.09).rebuild(p)
    ref = cKDTree(pos, boxsize=2.0).query_pairs(0.09 * (1 - 1e-12))
    assert _pairs(g) == ref


def test_small_periodic_box_uses_fallback():
    rng = np.random.default_rng(2)
    pos = rng.uniform(0, 1, (60, 2))
    h = 0.4
    p = ParticleSet(pos, 1.0, (1.0, 1.0), (True, True))
    g = NeighborGrid.for_particles(p, h).rebuild(p)
    assert _pairs(g) == brute_force_pairs(pos, h, (1.0, 1.0), (True, True))
    with pytest.raises(InvalidArgumentError):
        NeighborGrid(0.6, (1.0, 1.0), (True, True))


def test_ordered_pairs_visit_each_once():
    rng = np.random.default_rng(3)
    p = ParticleSet(rng.uniform(0, 1, (200, 2)), 1.0)
    g = NeighborGrid.for_particles(p, 0.1).rebuild(p)
    i, j = g.ordered_pairs()
    assert np.all(i != j)
    assert len(set(zip(i.tolist(), j.tolist()))) == len(i) == 2 * len(g.pi)
    assert g.neighbor_counts().sum() == len(i)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 300), st.floats(0.02, 0.2), st.integers(0, 2**31 - 1), st.booleans())
def test_pair_search_property(n, h, seed, periodic):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0, 1, (n, 2))
    per = (periodic, periodic)
    if periodic and h >= 0.5:
        return
    p = ParticleSet(pos, 1.0, (1.0, 1.0), per)
    g = NeighborGrid.for_particles(p, h).rebuild(p)
    assert _pairs(g) == brute_force_pairs(pos, h, (1.0, 1.0), per)


def test_isolated_and_coincident_volumes():
    spec = KernelSpec(0.1)
    p = ParticleSet([[0.5, 0.5]], 1.0)
    g = NeighborGrid.for_particles(p, 0.1).rebuild(p)
    assert particle_volume(0, p, g, spec) == pytest.approx(1 / kernel_value(0.0, spec))
    q = ParticleSet([[0.5, 0.5], [0.5, 0.5]], 1.0)
    g = NeighborGrid.for_particles(q, 0.1).rebuild(q)
    np.testing.assert_allclose(particle_volumes(q, g, spec), 1 / (2 * kernel_value(0.0, spec)))


def test_square_lattice_volume_h2():
    n = 20
    p = initialize_jittered((float(n), float(n)), 1.0, 0.0)
    spec = KernelSpec(2.0)
    g = NeighborGrid.for_particles(p, 2.0).rebuild(p)
    # the four sites at r = h are outside the strict r < h support
    assert np.all(g.neighbor_counts() == 8)
    v = particle_volumes(p, g, spec)
    # direct 13-site lattice sum (r <= 2; W vanishes at r = 2)
    sites = [(i, j) for i in range(-2, 3) for j in range(-2, 3) if i * i + j * j <= 4]
    assert len(sites) == 13
    ref = 1 / sum(kernel_value(np.hypot(i, j), spec) for i, j in sites)
    np.testing.assert_allclose(v, ref, rtol=1e-13)
    assert ref == pytest.approx(0.9638, abs=2e-3)


def test_volume_bounds_random():
    rng = np.random.default_rng(4)
    spec = KernelSpec(0.08)
    for trial in range(20):
        p = ParticleSet(rng.uniform(0, 1, (300, 2)), 1.0, (1.0, 1.0), (True, True))
        g = NeighborGrid.for_particles(p, spec.cutoff).rebuild(p)
        v = particle_volumes(p, g, spec)
        M = g.neighbor_counts().max() + 1
        w0 = kernel_value(0.0, spec)
        assert np.all(v <= 1 / w0 * (1 + 1e-12))
        assert np.all(v >= 1 / (M * w0) * (1 - 1e-12))
        i = int(rng.integers(p.n))
        assert particle_volume(i, p, g, spec) == pytest.approx(v[i], rel=1e-13)


def test_kernel_sums_match_dense():
    rng = np.random.default_rng(5)
    spec = KernelSpec(0.15)
    p = ParticleSet(rng.uniform(0, 1, (150, 2)), 1.0, (1.0, 1.0), (True, True))
    g = NeighborGrid.for_particles(p, spec.cutoff).rebuild(p)
    d = p.displacement(p.positions[:, None], p.positions[None])
    dense = kernel_value(np.linalg.norm(d, axis=-1), spec).sum(axis=1)
    np.testing.assert_allclose(kernel_sums(p, g, spec), dense, rtol=1e-12)


def test_mean_volumes():
    assert mean_volumes([2.0, 2.0, 2.0]) == (2.0, 2.0, 2.0)
    m, H, vmax = mean_volumes([1.0, 4.0])
    assert m == pytest.approx(2.5)
    assert H == pytest.approx(1.6)
    assert vmax == 4.0
    rng = np.random.default_rng(6)
    for _ in range(1000):
        v = rng.uniform(0.1, 5.0, rng.integers(1, 20))
        m, H, _ = mean_volumes(v)
        assert m >= H * (1 - 1e-12)


def test_fraction_far_away_is_zero():
    p = ParticleSet([[0.2, 0.2], [0.25, 0.2]], 0.01)
    assert particle_based_fraction([0.8, 0.8], p, KernelSpec(0.1))[0] == 0.0


def test_fraction_integrates_to_volume():
    rng = np.random.default_rng(8)
    p = ParticleSet(rng.uniform(0.3, 0.7, (6, 2)), 0.05)
    spec = KernelSpec(0.1)
    total = dblquad(lambda y, x: particle_based_fraction([x, y], p, spec)[0], 0.1, 0.9, 0.1, 0.9,
                    epsabs=1e-9, epsrel=1e-9)[0]
    assert total == pytest.approx(0.05, abs=1e-6)


def test_fraction_periodic_lattice_is_unit_ish():
    n = 32
    p = initialize_jittered((1.0, 1.0), 1 / n, 0.0)
    spec = KernelSpec(2.6 / n)
    rng = np.random.default_rng(1)
    a = particle_based_fraction(rng.uniform(0, 1, (200, 2)), p, spec)
    assert np.all(np.abs(a - 1) < 0.05)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    p = ParticleSet(rng.uniform(0, 1, (30, 2)), 1.0)
    vol = rng.uniform(0, 1, 30)
    phi = rng.normal(size=30)
    path = tmp_path / "p.csv"
    write_particles_csv(path, p, vol, phi)
    with open(path) as fh:
        assert fh.readline().strip() == "x,y,volume,phi"
    x, v, f = read_particles_csv(path)
    np.testing.assert_array_equal(x, p.positions)
    np.testing.assert_array_equal(v, vol)
    np.testing.assert_array_equal(f, phi)
