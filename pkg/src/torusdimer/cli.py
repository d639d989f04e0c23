"""Command-line front end: identity verification, exact laws, convergence
sweeps, and Monte Carlo sampling.

Exit codes: 0 success, 1 identity-check failure, 2 law aliasing beyond
tolerance, 3 convergence monotonicity violation, 4 sampler disagreement with
the exact law, 64 usage errors."""

from __future__ import annotations

import math
import os
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import crsf as cf
from . import dimer_height as dh
from . import distribution as ds
from . import special_functions as sfn
from . import transfer_operator as to
from .torus_graph import GraphError, build_square_torus, temperleyan
from .twisted_laplacian import Character, assemble, det_spectral, determinant

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_ALIASING = 2
EXIT_MONOTONE = 3
EXIT_SAMPLER = 4
EXIT_USAGE = 64


@dataclass(frozen=True)
class RunConfig:
    n: int = 8
    grid: int = 9
    tau: complex = 1j
    seed: int | None = None
    samples: int = 100000
    threads: int = 1
    tol_identity: float = 1e-8
    tol_aliasing: float = 1e-6
    tol_monotone: float = 1e-3
    out_dir: Path = Path(".")

    def __post_init__(self):
        for name in ("tol_identity", "tol_aliasing", "tol_monotone"):
            if getattr(self, name) <= 0:
                raise click.UsageError(f"{name} must be positive")
        if self.threads < 1:
            raise click.UsageError("threads must be at least 1")
        if self.samples < 100:
            raise click.UsageError("need at least 100 samples")
        if self.grid < 5 or self.grid % 2 == 0:
            raise click.UsageError("inversion grid size must be odd and >= 5")
        if self.n < 2:
            raise click.UsageError("mesh size must be at least 2")


def parse_tau(text: str) -> complex:
    """Accepts "i", "2i", "a+bi", "a-bi", and "(a+bi)/c"."""
    t = text.strip().replace(" ", "")
    den = 1.0
    m = re.fullmatch(r"\((?P<core>[^()]+)\)/(?P<den>\d+(?:\.\d+)?)", t)
    if m:
        t = m["core"]
        den = float(m["den"])
    t = re.sub(r"(?<![0-9.])i", "1i", t)  # bare i -> 1i
    t = t.replace("i", "j")
    try:
        tau = complex(t) / den
    except ValueError:
        raise click.UsageError(f"cannot parse modulus {text!r}; "
                               "use forms like 'i', '2i', '1+2i', '(1+8i)/8'")
    if tau.imag <= 0:
        raise click.UsageError("modulus must have positive imaginary part")
    return tau


def shift_for(n: int, tau: complex) -> tuple[int, int]:
    return round(n * tau.real), round(n * tau.imag)


def _load_config_file(path: str) -> dict:
    values = {}
    keys = {"n", "grid", "tau", "seed", "samples", "threads",
            "tol_identity", "tol_aliasing", "tol_monotone", "out_dir"}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected key=value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in keys:
            raise click.UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val
    return values


def build_config(config_path, **flags) -> RunConfig:
    merged = {}
    if config_path:
        raw = _load_config_file(config_path)
        casts = {"n": int, "grid": int, "seed": int, "samples": int,
                 "threads": int, "tau": parse_tau,
                 "tol_identity": float, "tol_aliasing": float,
                 "tol_monotone": float, "out_dir": Path}
        for key, val in raw.items():
            try:
                merged[key] = casts[key](val)
            except ValueError:
                raise click.UsageError(f"config value {key}={val!r} is malformed")
    for key, val in flags.items():
        if val is not None:
            merged[key] = val
    if "out_dir" not in merged:
        merged["out_dir"] = Path(os.environ.get("TORUSDIMER_OUTDIR", "."))
    return RunConfig(**merged)


_COMMON = [
    click.option("--config", "config_path", type=click.Path(exists=True),
                 default=None, help="flat key=value config file; flags win"),
    click.option("--threads", type=int, default=None,
                 help="worker threads for character grids (order-stable)"),
]


def common_options(fn):
    for opt in reversed(_COMMON):
        fn = opt(fn)
    return fn


@click.group()
def cli():
    """Exact and sampled height-change laws on toroidal Temperleyan graphs."""


# ------------------------------------------------------------------ verify

def _check_forman(cfg: RunConfig, inject: str | None) -> tuple[bool, str]:
    rng = np.random.default_rng(1)

    def rc(p, q, tag):
        return 0.05 + 0.9 * ((hash((p, q, tag)) % 1000) / 1000.0)

    worst = 0.0
    for g in (build_square_torus(2, (0, 2)), build_square_torus(3, (0, 2)),
              build_square_torus(2, (0, 2), conductance=rc)):
        from .twisted_laplacian import forman_sum
        for _ in range(20):
            chi = Character(rng.uniform(), rng.uniform())
            fs = forman_sum(g, chi)
            dd = determinant(assemble(g, chi)).value()
            worst = max(worst, abs(fs - dd) / abs(dd))
    return worst <= 1e-10, f"worst relative error {worst:.3e} (tol 1e-10)"


def _check_temperley(cfg: RunConfig, inject: str | None) -> tuple[bool, str]:
    import itertools
    g = build_square_torus(2, (0, 2))
    tg = temperleyan(g)
    fields = list(cf.enumerate_vector_fields(g))
    forests = cf.enumerate_crsfs(g)
    ms = dh.enumerate_matchings(tg)
    total = sum(Fraction(m.weight) for m in ms)
    seen = set()
    for f in forests:
        for signs in itertools.product((1, -1), repeat=len(f.cycles)):
            fd = cf.dual_crsf(tg, f, list(signs))
            seen.add(dh.temperley_forward(tg, f, fd).assignment)
    ok = (len(fields) == 256 and len(forests) == 128 and len(ms) == 272
          and total == Fraction(17, 16)
          and seen == {m.assignment for m in ms})
    return ok, (f"{len(fields)} fields, {len(forests)} forests, "
                f"{len(ms)} matchings, weight {total}, "
                f"bijection {'onto' if seen == {m.assignment for m in ms} else 'BROKEN'}")


def _check_periods(cfg: RunConfig, inject: str | None) -> tuple[bool, str]:
    from .torus_graph import HomologyClass

    g = build_square_torus(2, (0, 2))
    tg = temperleyan(g)
    flip = -1 if inject == "omega-sign-flip" else 1
    bad = 0
    ms = dh.enumerate_matchings(tg)
    walk_a, walk_b = dh._basis_walks_cached(tg)
    for m in ms:
        int_a = flip * dh.dual_path_integral(tg, m, walk_a)
        int_b = flip * dh.dual_path_integral(tg, m, walk_b)
        via_periods = HomologyClass(r=-int_a, s=int_b)
        forest, forest_dual = dh.temperley_back(tg, m)
        a = sum(g.walk_crossing_sum(c)[0] for c in forest.cycles) \
            + sum(tg.dual.walk_crossing_sum(c)[0] for c in forest_dual.cycles)
        b = sum(g.walk_crossing_sum(c)[1] for c in forest.cycles) \
            + sum(tg.dual.walk_crossing_sum(c)[1] for c in forest_dual.cycles)
        via_pair = HomologyClass.from_crossing(a // 2, b // 2)
        if via_periods != via_pair:
            bad += 1
    return bad == 0, f"{bad} of {len(ms)} matchings disagree between " \
                     "period route and forest-pair route"


def _check_fredholm(cfg: RunConfig, inject: str | None) -> tuple[bool, str]:
    rng = np.random.default_rng(4)
    worst = 0.0
    for n in (4, 8):
        g = build_square_torus(n, (0, n))
        pair = to.choose_cycles(g)
        for _ in range(5):
            v = rng.uniform()
            r = to.verify_fred(g, Character(rng.uniform(), v),
                               Character(rng.uniform(), v), pair)
            worst = max(worst, r)
    return worst <= cfg.tol_identity, \
        f"worst residual {worst:.3e} (tol {cfg.tol_identity:g})"


def _check_contraction(cfg: RunConfig, inject: str | None) -> tuple[bool, str]:
    worst = 0.0
    for n in (4, 8, 16):
        g = build_square_torus(n, (0, n))
        pair = to.choose_cycles(g)
        for u in (0.1, 0.3, 0.5, 0.7, 0.9):
            for v in (0.0, 0.33, 0.67):
                t = to.poisson_matrices(g, Character(u, v), pair)
                worst = max(worst, to.op_norm_inf(t.S))
    return worst <= 1 - 1e-3, f"worst operator norm {worst:.6f} (cap 0.999)"


def _check_spectral(cfg: RunConfig, inject: str | None) -> tuple[bool, str]:
    rng = np.random.default_rng(6)
    worst = 0.0
    for n, shift in ((2, (0, 2)), (4, (0, 4)), (8, (1, 8)), (4, (2, 2))):
        g = build_square_torus(n, shift)
        for _ in range(5):
            chi = Character(rng.uniform(), rng.uniform())
            dd = determinant(assemble(g, chi))
            sp = det_spectral(n, shift, chi)
            worst = max(worst, abs(dd.value() - sp.value()) / abs(sp.value()))
    return worst <= 1e-10, f"worst relative error {worst:.3e} (tol 1e-10)"


def _check_analytic(cfg: RunConfig, inject: str | None) -> tuple[bool, str]:
    msgs = []
    ok = True
    d = abs(sfn.theta_odd(0.3 + 0.1j, 1j, "sum")
            - sfn.theta_odd(0.3 + 0.1j, 1j, "product"))
    ok &= d < 1e-12
    msgs.append(f"theta sum/product {d:.1e}")
    eta_ref = math.gamma(0.25) / (2 * math.pi ** 0.75)
    d = abs(sfn.dedekind_eta(1j) - eta_ref)
    ok &= d < 1e-14
    msgs.append(f"eta(i) {d:.1e}")
    rng = np.random.default_rng(8)
    worst = sfn.poisson_identity_residual(0.3, 0.7, 1j)
    for _ in range(4):
        worst = max(worst, sfn.poisson_identity_residual(
            rng.uniform(), rng.uniform(),
            rng.uniform(-0.4, 0.4) + 1j * rng.uniform(0.6, 1.8)))
    ok &= worst < 1e-10
    msgs.append(f"poisson {worst:.1e}")
    hworst = 0.0
    for chi1, chi2 in (((0.3, 0.7), (0.6, 0.2)), ((0.1, 0.45), (0.85, 0.3))):
        hk = sfn.heat_kernel_log_ratio(chi1, chi2, 1j)
        t2 = 2 * math.log(sfn.torsion(*chi2, 1j) / sfn.torsion(*chi1, 1j))
        hworst = max(hworst, abs(hk - t2))
    ok &= hworst < 1e-6
    msgs.append(f"heat-vs-torsion {hworst:.1e}")
    rep = sfn.theta_argument_report(1j)
    msgs.append(f"argument variants primary {rep['primary']:.1e} "
                f"literal {rep['literal']:.1e}")
    ok &= rep["primary"] < 1e-10
    return bool(ok), "; ".join(msgs)


CHECKS = {
    "forman": _check_forman,
    "temperley": _check_temperley,
    "periods": _check_periods,
    "fredholm": _check_fredholm,
    "contraction": _check_contraction,
    "spectral": _check_spectral,
    "analytic": _check_analytic,
}


@cli.command()
@common_options
@click.option("--only", type=click.Choice(sorted(CHECKS)), default=None,
              help="run a single check")
@click.option("--inject", type=click.Choice(["omega-sign-flip"]), default=None,
              help="deliberately break a convention to prove the checks bite")
@click.option("--tol-identity", type=float, default=None)
def verify(config_path, threads, only, inject, tol_identity):
    """Run the identity suite; any failure exits 1."""
    cfg = build_config(config_path, threads=threads, tol_identity=tol_identity)
    names = [only] if only else list(CHECKS)
    failed = 0
    for name in names:
        ok, detail = CHECKS[name](cfg, inject)
        click.echo(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += not ok
    return EXIT_VERIFY if failed else EXIT_OK


# --------------------------------------------------------------------- law

@cli.command()
@common_options
@click.option("--n", type=int, default=None, help="mesh size")
@click.option("--grid", "-M", "grid", type=int, default=None,
              help="odd inversion grid size")
@click.option("--tau", "tau_text", type=str, default=None, help="modulus")
@click.option("--tol-aliasing", type=float, default=None)
@click.option("--out", type=click.Path(), default=None)
def law(config_path, threads, n, grid, tau_text, tol_aliasing, out):
    """Exact height-change law on the uniform square torus, as JSON."""
    tau = parse_tau(tau_text) if tau_text else None
    cfg = build_config(config_path, threads=threads, n=n, grid=grid, tau=tau,
                       tol_aliasing=tol_aliasing)
    law_obj = ds.height_law_spectral(cfg.n, shift_for(cfg.n, cfg.tau),
                                     cfg.grid, cfg.threads)
    path = Path(out) if out else cfg.out_dir / f"law_n{cfg.n}_M{cfg.grid}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(ds.law_to_json(law_obj))
    click.echo(f"law written to {path} (aliasing {law_obj.aliasing:.3e})")
    if law_obj.aliasing > cfg.tol_aliasing:
        click.echo(f"aliasing {law_obj.aliasing:.3e} exceeds tolerance "
                   f"{cfg.tol_aliasing:g}; rerun with a larger grid "
                   f"(--grid {cfg.grid + 2} or more)", err=True)
        return EXIT_ALIASING
    return EXIT_OK


# ---------------------------------------------------------------- converge

@cli.command()
@common_options
@click.option("--sizes", type=str, default="8,16,32,64",
              help="comma-separated mesh sizes")
@click.option("--grid", "-M", "grid", type=int, default=None)
@click.option("--tau", "tau_text", type=str, default=None)
@click.option("--method", type=click.Choice(["spectral", "dense"]),
              default="spectral")
@click.option("--tol-monotone", type=float, default=None)
@click.option("--out", type=click.Path(), default=None)
def converge(config_path, threads, sizes, grid, tau_text, method,
             tol_monotone, out):
    """Total-variation sweep toward the discrete Gaussian; writes CSV."""
    try:
        ns = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        raise click.UsageError(f"cannot parse sizes {sizes!r}")
    if not ns:
        raise click.UsageError("need at least one size")
    tau = parse_tau(tau_text) if tau_text else None
    cfg = build_config(config_path, threads=threads, grid=grid, tau=tau,
                       tol_monotone=tol_monotone)
    path = Path(out) if out else cfg.out_dir / "convergence.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = ds.convergence_sweep(ns, cfg.grid, cfg.tau, method=method,
                                threads=cfg.threads, csv_path=path)
    for row in rows:
        click.echo(f"n={row.n}: tv={row.tv:.6e} aliasing={row.aliasing:.3e} "
                   f"({row.seconds:.2f}s)")
    click.echo(f"sweep written to {path}")
    for prev, cur in zip(rows, rows[1:]):
        if cur.tv > prev.tv + cfg.tol_monotone:
            click.echo(f"total variation rose from {prev.tv:.6e} (n={prev.n}) "
                       f"to {cur.tv:.6e} (n={cur.n})", err=True)
            return EXIT_MONOTONE
    return EXIT_OK


# ------------------------------------------------------------------ sample

@cli.command()
@common_options
@click.option("--n", type=int, default=None)
@click.option("--grid", "-M", "grid", type=int, default=None)
@click.option("--samples", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
def sample(config_path, threads, n, grid, samples, seed, out):
    """Monte Carlo height-change law, checked against the exact law."""
    cfg = build_config(config_path, threads=threads, n=n, grid=grid,
                       samples=samples, seed=seed)
    if cfg.seed is None:
        raise click.UsageError("sampling requires --seed")
    g = build_square_torus(cfg.n, shift_for(cfg.n, cfg.tau))
    sampled = cf.mc_height_law(g, cfg.samples, cfg.seed)
    exact = ds.height_law_spectral(cfg.n, shift_for(cfg.n, cfg.tau),
                                   cfg.grid, cfg.threads)
    path = Path(out) if out else cfg.out_dir / \
        f"sample_n{cfg.n}_seed{cfg.seed}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cf.serialize_sampled_law(sampled))
    worst_dev, worst_cls = 0.0, None
    for key in set(sampled.probs) | set(exact.probs):
        p = sampled.probs.get(key, 0.0)
        q = exact.probs.get(key, 0.0)
        sigma = math.sqrt(q * (1.0 - q) / cfg.samples)
        dev = abs(p - q) - 3.0 * sigma
        if dev > worst_dev:
            worst_dev, worst_cls = dev, key
    click.echo(f"sampled law written to {path}")
    click.echo(f"worst excess over 3 sigma: {worst_dev:.4f} at {worst_cls}")
    if worst_dev > 0.005:
        click.echo(f"class {worst_cls} deviates beyond 3 sigma + 0.005",
                   err=True)
        return EXIT_SAMPLER
    return EXIT_OK


def main(argv=None) -> int:
    try:
        code = cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_VERIFY
    except (GraphError, ValueError, ArithmeticError, RuntimeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_VERIFY
    return code if isinstance(code, int) else EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
