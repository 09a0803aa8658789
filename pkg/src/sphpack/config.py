"""Run configuration: INI-style ``key = value`` files with section headers.

See ``configs/example.cfg`` for every recognised key.  Sections:

    [run]      scheme, c, steps, seeds, jitter, threshold, window, trace_stride,
               mu, dt, output_dir (relative to the working directory)
    [grid]     spacing or n; origin; extent (or size for a periodic box)
    [kernel]   exactly one of h_over_dx, h_over_dp
    [domain]   a single region, or several [region <name>] sections

A region is ``shape = circle | annulus | half_plane | axis_box | periodic_box``
plus that shape's parameters.
"""

import configparser
from dataclasses import dataclass, field

from .errors import InvalidArgumentError
from .geometry import Annulus, AxisBox, Circle, HalfPlane, sample_to_grid
from .relaxation import SCHEMES

SHAPES = ("circle", "annulus", "half_plane", "axis_box", "periodic_box")


class ConfigError(InvalidArgumentError):
    """Bad configuration; the message names the file, section and key."""


@dataclass
class Region:
    name: str
    shape: str
    params: dict

    @property
    def periodic(self):
        return self.shape == "periodic_box"

    def build(self):
        p = self.params
        if self.shape == "circle":
            return Circle(p["center"], p["radius"])
        if self.shape == "annulus":
            return Annulus(p["center"], p["r_inner"], p["r_outer"])
        if self.shape == "half_plane":
            return HalfPlane(p["point"], p["normal"])
        if self.shape == "axis_box":
            return AxisBox(p["min_corner"], p["max_corner"])
        raise InvalidArgumentError(f"region {self.name!r} has no level-set shape")


@dataclass
class RunConfig:
    path: str
    regions: list
    spacing: float
    origin: tuple = (0.0, 0.0)
    extent: tuple = (1.0, 1.0)
    h_factor: float = 2.6
    h_reference: str = "dx"  # "dx" or "dp"
    scheme: str = "gradient_descent"
    c: float = 0.01
    steps: int = 20000
    seeds: list = field(default_factory=lambda: [0])
    jitter: float = 0.25
    threshold: float = 1e-10
    window: int = 100
    trace_stride: int = 1
    mu: float = None
    dt: float = None
    output_dir: str = "."

    def nodes(self):
        return tuple(int(round(e / self.spacing)) + 1 for e in self.extent)

    def level_set(self, region):
        nx, ny = self.nodes()
        return sample_to_grid(region.build(), self.origin, self.spacing, nx, ny)


_REGION_KEYS = {
    "circle": {"center": "pair", "radius": "float"},
    "annulus": {"center": "pair", "r_inner": "float", "r_outer": "float"},
    "half_plane": {"point": "pair", "normal": "pair"},
    "axis_box": {"min_corner": "pair", "max_corner": "pair"},
    "periodic_box": {},
}


class _Reader:
    def __init__(self, parser, path):
        self.cp = parser
        self.path = path

    def fail(self, section, key, msg):
        where = f"[{section}] {key}" if key else f"[{section}]"
        raise ConfigError(f"{self.path}: {where}: {msg}")

    def raw(self, section, key, default=None, required=False):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        if required:
            self.fail(section, key, "missing required key")
        return default

    def float(self, section, key, default=None, required=False, positive=False):
        v = self.raw(section, key, None, required)
        if v is None or v == "":
            return default
        try:
            x = float(v)
        except ValueError:
            self.fail(section, key, f"expected a number, got {v!r}")
        if positive and not x > 0:
            self.fail(section, key, f"must be positive, got {v}")
        return x

    def int(self, section, key, default=None, required=False, minimum=None):
        v = self.raw(section, key, None, required)
        if v is None or v == "":
            return default
        try:
            x = int(v)
        except ValueError:
            self.fail(section, key, f"expected an integer, got {v!r}")
        if minimum is not None and x < minimum:
            self.fail(section, key, f"must be >= {minimum}, got {x}")
        return x

    def floats(self, section, key, count=None, default=None, required=False):
        v = self.raw(section, key, None, required)
        if v is None or v == "":
            return default
        try:
            out = tuple(float(t) for t in v.replace(",", " ").split())
        except ValueError:
            self.fail(section, key, f"expected numbers, got {v!r}")
        if count is not None and len(out) != count:
            self.fail(section, key, f"expected {count} values, got {len(out)}")
        return out

    def region(self, section, name):
        shape = self.raw(section, "shape", required=True)
        if shape not in SHAPES:
            self.fail(section, "shape", f"unknown shape {shape!r}; expected one of {', '.join(SHAPES)}")
        params = {}
        for key, kind in _REGION_KEYS[shape].items():
            if kind == "pair":
                params[key] = self.floats(section, key, 2, required=True)
            else:
                params[key] = self.float(section, key, required=True)
        if shape == "periodic_box":
            params["size"] = self.floats(section, "size", 2, default=None)
        region = Region(name, shape, params)
        if shape != "periodic_box":
            try:
                region.build()
            except InvalidArgumentError as e:
                self.fail(section, "shape", str(e))
        return region


def parse_config(text, path="<config>"):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=path)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    rd = _Reader(cp, path)

    known = {"run", "grid", "kernel", "domain"}
    for s in cp.sections():
        if s not in known and not s.startswith("region "):
            rd.fail(s, None, "unknown section")

    regions = []
    if cp.has_section("domain"):
        regions.append(rd.region("domain", "domain"))
    for s in cp.sections():
        if s.startswith("region "):
            name = s.split(None, 1)[1].strip()
            if not name.replace("_", "").replace("-", "").isalnum():
                rd.fail(s, None, "region names may use letters, digits, '_' and '-'")
            regions.append(rd.region(s, name))
    if not regions:
        raise ConfigError(f"{path}: no [domain] or [region <name>] section")
    if len(regions) > 1 and any(r.periodic for r in regions):
        rd.fail("domain", "shape", "periodic_box cannot be combined with other regions")

    # kernel
    hx = rd.float("kernel", "h_over_dx", positive=True)
    hp = rd.float("kernel", "h_over_dp", positive=True)
    if (hx is None) == (hp is None):
        rd.fail("kernel", "h_over_dx", "give exactly one of h_over_dx, h_over_dp")

    # grid
    size = regions[0].params.get("size") if regions[0].periodic else None
    extent = rd.floats("grid", "extent", 2, default=size or (1.0, 1.0))
    if size is not None:
        extent = size
    if min(extent) <= 0:
        rd.fail("grid", "extent", "must be positive")
    spacing = rd.float("grid", "spacing", positive=True)
    n = rd.int("grid", "n", minimum=2)
    if (spacing is None) == (n is None):
        rd.fail("grid", "spacing", "give exactly one of spacing, n")
    if spacing is None:
        spacing = extent[0] / n
    origin = rd.floats("grid", "origin", 2, default=(0.0, 0.0))

    scheme = rd.raw("run", "scheme", "gradient_descent")
    if scheme not in SCHEMES:
        rd.fail("run", "scheme", f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}")
    if scheme == "gradient_descent_with_surface_bounding" and regions[0].periodic:
        rd.fail("run", "scheme", "surface bounding needs a bounded domain")
    seeds = rd.raw("run", "seeds", None) or rd.raw("run", "seed", "0")
    try:
        seeds = [int(s) for s in seeds.replace(",", " ").split()]
    except ValueError:
        rd.fail("run", "seeds", f"expected integers, got {seeds!r}")
    if not seeds:
        rd.fail("run", "seeds", "no seed given")
    jitter = rd.float("run", "jitter", 0.25)
    if not 0 <= jitter <= 0.5:
        rd.fail("run", "jitter", "must lie in [0, 0.5]")

    out = rd.raw("run", "output_dir", ".")

    return RunConfig(
        path=path,
        regions=regions,
        spacing=spacing,
        origin=origin,
        extent=extent,
        h_factor=hx if hx is not None else hp,
        h_reference="dx" if hx is not None else "dp",
        scheme=scheme,
        c=rd.float("run", "c", 0.01, positive=True),
        steps=rd.int("run", "steps", 20000, minimum=1),
        seeds=seeds,
        jitter=jitter,
        threshold=rd.float("run", "threshold", 1e-10),
        window=rd.int("run", "window", 100, minimum=1),
        trace_stride=rd.int("run", "trace_stride", 1, minimum=1),
        mu=rd.float("run", "mu"),
        dt=rd.float("run", "dt", positive=True),
        output_dir=out,
    )


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from None
    return parse_config(text, path)
