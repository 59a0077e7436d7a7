"""Command-line interface.

Exit codes: 0 success, 1 a verification or certificate failed, 2 a
construction or module error, 3 an I/O or parse failure.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click

from . import checkpoint as CK
from . import cherry as Ch
from . import config as C
from . import construction as K
from . import plotting
from . import report
from . import rotation as R
from .circle_core import from_text, to_text
from .errors import FlatDenjoyError

EXIT_OK, EXIT_FAIL, EXIT_ERROR, EXIT_IO = 0, 1, 2, 3


class ParseFailure(Exception):
    pass


def _guard(fn):
    """Map library and I/O errors onto the exit-code contract."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            code = fn(*args, **kwargs)
        except FlatDenjoyError as exc:
            stage = getattr(exc, "stage", None)
            prefix = f"stage {stage}: " if stage is not None and "stage" not in str(exc) else ""
            click.echo(f"error: {prefix}{type(exc).__name__}: {exc}", err=True)
            code = EXIT_ERROR
        except (OSError, ParseFailure) as exc:
            click.echo(f"error: {exc}", err=True)
            code = EXIT_IO
        sys.exit(code or EXIT_OK)
    return wrapper


def _config(config_path, **overrides) -> C.RunConfig:
    text = ""
    if config_path:
        text = Path(config_path).read_text()
    try:
        return C.build(text, **overrides)
    except FlatDenjoyError:
        raise
    except ValueError as exc:
        raise ParseFailure(f"bad configuration: {exc}") from exc


def _load(path):
    """A map descriptor, or a stage checkpoint (``.state`` or its ``.map``)."""
    p = Path(path)
    stem = p.with_suffix("")
    try:
        if p.suffix == ".state" or Path(f"{stem}.state").exists():
            S = CK.load(p)
            return S.map, S
        return from_text(p.read_text()), None
    except (ValueError, KeyError, IndexError) as exc:
        raise ParseFailure(f"cannot parse {path}: {exc}") from exc


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text)
    return p


config_opt = click.option("--config", "config_path", type=click.Path(dir_okay=False),
                          help="key=value configuration file.")
out_opt = click.option("--out", default=None, help="Output directory.")
seed_opt = click.option("--seed", type=int, default=None)
samples_opt = click.option("--samples", type=int, default=None)
iters_opt = click.option("--iters", type=int, default=None)


@click.group()
def cli():
    """Smooth circle maps with a flat interval and a wandering interval."""


@cli.command()
@config_opt
@out_opt
@click.option("--stages", type=int, default=None, help="Number of stages K.")
@click.option("--max-hit", type=int, default=None, help="Hit-time budget M_max.")
@click.option("--anchored", is_flag=True, default=False, help="Keep the flat interval's left end fixed.")
@click.option("--dump-stage", type=int, default=None,
              help="Also print this stage's descriptor and plot its map.")
@_guard
def construct(config_path, out, stages, max_hit, anchored, dump_stage):
    """Run the construction, writing checkpoints and certificate tables."""
    cfg = _config(config_path, out=out, K=stages, M_max=max_hit, anchored=anchored or None)
    h = cfg.hash
    root = Path(cfg.out)
    ckdir = root / "checkpoints"

    def on_stage(S, rep):
        CK.save(S, ckdir, h)
        click.echo(report.margin_table(rep))
        if dump_stage == S.n:
            click.echo(to_text(S.map), nl=False)
            plotting.plot_map(S.map, root / "figures" / f"stage_{S.n}.png", h)

    M, cert, S = K.run(cfg.K, cfg.eps_value, cfg.rho_value, cfg.l, cfg.anchor,
                       cfg.M_max or None, cfg.enclosure_n,
                       log=lambda m: click.echo(m, err=True), on_stage=on_stage)
    _write(root, "final.map", f"# config {h}\n" + to_text(M))
    report.write_certificate(cert, root / "certificate", h)
    plotting.plot_decay(cert.decay, root / "figures" / "decay.png", h)
    plotting.plot_map(M, root / "figures" / "map.png", h)
    if not cert.ok:
        bad = [(r.stage, r.failed()) for r in cert.reports if not r.ok]
        click.echo(f"certificate incomplete: {bad}", err=True)
        return EXIT_FAIL
    click.echo(f"certificate complete, config {h}")
    return EXIT_OK


@cli.command()
@click.argument("checkpoint", type=click.Path(dir_okay=False))
@config_opt
@_guard
def verify(checkpoint, config_path):
    """Re-check the ten stage conditions of a checkpoint."""
    cfg = _config(config_path)
    try:
        S = CK.load(checkpoint)
    except (ValueError, KeyError, IndexError) as exc:
        raise ParseFailure(f"cannot parse {checkpoint}: {exc}") from exc
    rep = K.verify_conditions(S, cfg.enclosure_n)
    click.echo(report.margin_table(rep))
    failed = rep.failed()
    if failed:
        click.echo(f"failed condition(s): {', '.join(map(str, failed))}", err=True)
        return EXIT_FAIL
    return EXIT_OK


@cli.command()
@click.argument("source", type=click.Path(dir_okay=False))
@config_opt
@out_opt
@samples_opt
@iters_opt
@seed_opt
@_guard
def basin(source, config_path, out, samples, iters, seed):
    """Estimate the sink-bound fraction of the circle."""
    cfg = _config(config_path, out=out, samples=samples, iters=iters, seed=seed)
    M, S = _load(source)
    N = cfg.iters or (S.r if S is not None else 1000)
    rep = Ch.basin_estimate(M, cfg.samples, N, cfg.seed, S.I if S is not None else None)
    p = _write(Path(cfg.out), "basin.csv", Ch.basin_csv(rep, cfg.hash))
    click.echo(f"sink {rep.sink:.4f} +- {rep.half_width:.4f}, attractor {rep.attractor:.4f}, "
               f"unresolved {rep.unresolved:.4f} -> {p}")
    return EXIT_OK


@cli.command()
@click.argument("source", type=click.Path(dir_okay=False))
@config_opt
@out_opt
@iters_opt
@_guard
def gapcover(source, config_path, out, iters):
    """Union of preimages of the flat interval up to depth --iters."""
    cfg = _config(config_path, out=out, iters=iters)
    M, _ = _load(source)
    cover = Ch.gap_cover(M, cfg.iters or 5)
    root = Path(cfg.out)
    p = _write(root, "gapcover.csv", Ch.gap_cover_csv(cover, cfg.hash))
    plotting.plot_gap_cover(cover, root / "gapcover.png", cfg.hash)
    click.echo(f"depth {cfg.iters or 5}: covered length {cover.length!r} -> {p}")
    for j, x in cover.ambiguous:
        click.echo(f"depth {j}: preimage endpoint {x!r} set to a flat boundary", err=True)
    return EXIT_OK


@cli.command()
@click.argument("source", type=click.Path(dir_okay=False))
@config_opt
@out_opt
@iters_opt
@click.option("--x0", type=float, default=None, help="Start point (default: middle of I).")
@_guard
def trace(source, config_path, out, iters, x0):
    """Suspension-flow trace as CSV and SVG."""
    cfg = _config(config_path, out=out, iters=iters)
    M, S = _load(source)
    if x0 is None:
        x0 = float(S.I.mid) if S is not None else 0.0
    tr = Ch.suspension_trace(M, x0, cfg.iters or 50)
    root = Path(cfg.out)
    _write(root, "trace.csv", Ch.trace_csv(tr, cfg.hash))
    p = plotting.plot_trace(tr, M, root / "trace.svg", cfg.hash)
    click.echo(f"{tr.periods} periods from {x0!r} -> {p}")
    return EXIT_OK


@cli.command()
@click.argument("source", type=click.Path(dir_okay=False))
@iters_opt
@config_opt
@_guard
def rotnum(source, iters, config_path):
    """Rotation number enclosure from --iters iterates."""
    cfg = _config(config_path, iters=iters)
    M, _ = _load(source)
    enc = R.rotation_enclosure(M, cfg.iters or 10_000)
    click.echo(f"[{enc.lower!r}, {enc.upper!r}] n={enc.n}")
    return EXIT_OK


@cli.command()
@click.argument("source", type=click.Path(dir_okay=False))
@config_opt
@out_opt
@iters_opt
@click.option("--tol", type=float, default=1e-5, help="Containment tolerance.")
@_guard
def tune(source, config_path, out, iters, tol):
    """Tune the translation so the rotation number matches the configured target."""
    cfg = _config(config_path, out=out, iters=iters)
    M, _ = _load(source)
    res = R.tune_translation(M, float(cfg.rho_value), tol, cfg.iters or 1_000_000)
    tuned = M.with_translation(res.t0)
    p = _write(Path(cfg.out), "tuned.map", f"# config {cfg.hash}\n" + to_text(tuned))
    click.echo(f"t0 {res.t0!r} enclosure [{res.enclosure.lower!r}, {res.enclosure.upper!r}]"
               f" -> {p}")
    return EXIT_OK


def main():
    cli()


if __name__ == "__main__":
    main()
