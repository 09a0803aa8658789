"""Command-line driver.

    sphpack relax <cfg>               relax particles as configured
    sphpack compare <cfg>             gradient descent vs. Litvinov from one start
    sphpack predict <h>               lattice prediction at h (in units of dx)
    sphpack table <h0> <h1> <dh>      prediction table over a range of h

Exit status: 0 success, 1 usage or configuration error, 2 divergence.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .errors import DivergenceError, InvalidArgumentError
from .kernel import KERNEL_FORM, KernelSpec
from .lattice import prediction_table, table_csv
from .particles import NeighborGrid, initialize_jittered, particle_volumes, write_particles_csv
from .relaxation import RelaxationConfig, particle_order, relax

log = logging.getLogger("sphpack")

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class Case:
    """One region and seed of a run, ready to relax."""

    name: str
    seed: int
    particles: object
    field: object
    kernel: KernelSpec
    h_factor: float
    h_reference: str


def build_case(cfg, region, seed):
    if region.periodic:
        size = region.params.get("size") or cfg.extent
        field = None
        ps = initialize_jittered(size, cfg.spacing, cfg.jitter, seed)
    else:
        field = cfg.level_set(region)
        hi = (cfg.origin[0] + cfg.extent[0], cfg.origin[1] + cfg.extent[1])
        ps = initialize_jittered(field, cfg.spacing, cfg.jitter, seed,
                                 extent=(cfg.origin, hi), volume=region.build().area)
    ref = cfg.spacing if cfg.h_reference == "dx" else ps.effective_spacing
    return Case(region.name, seed, ps, field, KernelSpec(cfg.h_factor * ref), cfg.h_factor, cfg.h_reference)


def relaxation_config(cfg, case, scheme=None):
    return RelaxationConfig(
        kernel=case.kernel,
        field=case.field,
        scheme=scheme or cfg.scheme,
        c=cfg.c,
        max_steps=cfg.steps,
        mu=cfg.mu,
        dt=cfg.dt,
        surface_spacing=cfg.spacing,
        threshold=cfg.threshold,
        window=cfg.window,
        trace_stride=cfg.trace_stride,
    )


def _interior(particles, field, h):
    if field is None:
        return None
    mask = field.interpolate(particles.positions) < -h
    return mask if np.any(mask) else None


def _progress(every):
    def cb(state, rec):
        if every and rec.step % every == 0:
            log.info("step %d  E = %.6e  max|U| = %.3e", rec.step, rec.E, rec.max_U)
    return cb


def _suffix(cfg, case):
    parts = []
    if len(cfg.regions) > 1:
        parts.append(case.name)
    if len(cfg.seeds) > 1:
        parts.append(f"seed{case.seed}")
    return "".join("_" + p for p in parts)


def write_outputs(outdir, suffix, cfg, case, final, trace, scheme):
    grid = NeighborGrid.for_particles(final, case.kernel.cutoff).rebuild(final)
    vol = particle_volumes(final, grid, case.kernel)
    phi = case.field.interpolate(final.positions) if case.field is not None else None
    write_particles_csv(os.path.join(outdir, f"particles_final{suffix}.csv"), final, vol, phi)
    trace.write_csv(os.path.join(outdir, f"trace{suffix}.csv"))

    mask = _interior(final, case.field, case.kernel.cutoff)
    meta = {
        "version": __version__,
        "config": os.path.abspath(cfg.path),
        "region": case.name,
        "kernel_form": KERNEL_FORM,
        "h": repr(case.kernel.cutoff),
        "h_factor": f"{case.h_factor} * {case.h_reference}",
        "dx": repr(cfg.spacing),
        "scheme": scheme,
        "c": repr(cfg.c),
        "N": final.n,
        "seed": case.seed,
        "jitter": repr(cfg.jitter),
        "steps": trace.records[-1].step,
        "converged": trace.converged,
        "initial_E": repr(trace.records[0].E),
        "final_E": repr(trace.records[-1].E),
        "psi6": f"{particle_order(final, 6, mask):.6f}",
        "psi4": f"{particle_order(final, 4, mask):.6f}",
        "max_phi": "nan" if phi is None else repr(float(np.max(phi))),
        "coincident_pairs": trace.coincident_pairs,
    }
    with open(os.path.join(outdir, f"run_meta{suffix}.txt"), "w") as fh:
        for k, v in meta.items():
            fh.write(f"{k} = {v}\n")
    return meta


def _load(args):
    cfg = load_config(args.config)
    if args.steps is not None:
        if args.steps < 1:
            raise InvalidArgumentError("--steps must be >= 1")
        cfg.steps = args.steps
    return cfg


def cmd_relax(args):
    cfg = _load(args)
    outdir = args.output_dir or cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    for region in cfg.regions:
        for seed in cfg.seeds:
            case = build_case(cfg, region, seed)
            log.info("region %s seed %d: N = %d, h = %.6g", case.name, seed, case.particles.n, case.kernel.cutoff)
            final, trace = relax(case.particles, relaxation_config(cfg, case), _progress(args.progress))
            meta = write_outputs(outdir, _suffix(cfg, case), cfg, case, final, trace, cfg.scheme)
            print(f"{case.name} seed={seed} N={meta['N']} steps={meta['steps']} "
                  f"E={float(meta['final_E']):.6e} psi6={meta['psi6']}")
    return EXIT_OK


def lead_ranges(steps, e_first, e_second):
    """Contiguous step ranges where the first trace is strictly lower, the
    second strictly lower, or both equal.  Returns a list of (label, s0, s1)."""
    out = []
    for s, a, b in zip(steps, e_first, e_second):
        label = "first" if a < b else "second" if b < a else "tie"
        if out and out[-1][0] == label:
            out[-1][2] = s
        else:
            out.append([label, s, s])
    return [tuple(r) for r in out]


def cmd_compare(args):
    cfg = _load(args)
    outdir = args.output_dir or cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    region, seed = cfg.regions[0], cfg.seeds[0]
    results = {}
    for scheme in ("gradient_descent", "litvinov"):
        case = build_case(cfg, region, seed)
        final, trace = relax(case.particles, relaxation_config(cfg, case, scheme), _progress(args.progress))
        trace.write_csv(os.path.join(outdir, f"trace_{scheme}.csv"))
        mask = _interior(final, case.field, case.kernel.cutoff)
        results[scheme] = (trace, particle_order(final, 6, mask))

    gd, lit = results["gradient_descent"][0], results["litvinov"][0]
    eg = dict(zip(gd.steps.tolist(), gd.energies))
    el = dict(zip(lit.steps.tolist(), lit.energies))
    common = sorted(set(eg) & set(el))
    names = {"first": "gradient_descent", "second": "litvinov", "tie": "tie"}
    lines = [f"initial_E gradient_descent = {gd.records[0].E!r}",
             f"initial_E litvinov = {lit.records[0].E!r}"]
    for label, s0, s1 in lead_ranges(common, [eg[s] for s in common], [el[s] for s in common]):
        lines.append(f"lower E: {names[label]} on steps {s0}-{s1}")
    for scheme, (trace, psi6) in results.items():
        lines.append(f"final {scheme}: step {trace.records[-1].step} E = {trace.records[-1].E!r} psi6 = {psi6:.6f}")
    summary = "\n".join(lines) + "\n"
    with open(os.path.join(outdir, "compare_summary.txt"), "w") as fh:
        fh.write(summary)
    sys.stdout.write(summary)
    return EXIT_OK


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_predict(args):
    if not args.h > 0:
        raise InvalidArgumentError("h must be positive")
    _emit(table_csv(prediction_table(args.h, args.h, 1.0)), args.output)
    return EXIT_OK


def cmd_table(args):
    _emit(table_csv(prediction_table(args.h0, args.h1, args.dh)), args.output)
    return EXIT_OK


def make_parser():
    p = _Parser(prog="sphpack", description="Particle relaxation by total-error gradient descent.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, text in (("relax", cmd_relax, "relax particles as configured"),
                           ("compare", cmd_compare, "gradient descent vs. Litvinov from one start")):
        s = sub.add_parser(name, help=text)
        s.add_argument("config")
        s.add_argument("-o", "--output-dir", help="override [run] output_dir")
        s.add_argument("--steps", type=int, help="override [run] steps")
        s.add_argument("--progress", type=int, default=1000, metavar="N",
                       help="log every N steps with -v (0: off)")
        s.set_defaults(func=fn)

    s = sub.add_parser("predict", help="predicted lattice pattern at h / dx")
    s.add_argument("h", type=float)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("table", help="prediction table for h0 <= h <= h1")
    s.add_argument("h0", type=float)
    s.add_argument("h1", type=float)
    s.add_argument("dh", type=float)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_table)
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DivergenceError as e:
        print(f"sphpack: diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, InvalidArgumentError) as e:
        print(f"sphpack: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"sphpack: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
