"""Command-line driver: ``weyl-census validate|census|report|presets``.

Exit codes: 0 success, 1 operational error, 2 validation failure.
A configuration argument is a JSON file path or ``preset:<name>``.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from . import freegroup as fg
from .census import (CACHE_NAME, build_census, dump_json, load_census, resolve_threads,
                     system_fingerprint, write_census)
from .errors import NotRegular, NotTransverse, PingPongFailed, WeylCensusError
from .growth import FlagBall, directional_counts, estimate_delta, orbit_counts, theorem_report
from .presets import PRESETS, preset_config, preset_names
from .schottky import SchottkySystem, load_system, validate

log = logging.getLogger("weyl_census")

EXIT_OK, EXIT_ERROR, EXIT_INVALID = 0, 1, 2
_VALIDATION_ERRORS = (NotRegular, NotTransverse, PingPongFailed)


class ValidationFailed(Exception):
    pass


def _read_config(spec: str) -> dict:
    if spec.startswith("preset:"):
        return preset_config(spec.split(":", 1)[1])
    try:
        text = Path(spec).read_text()
    except OSError as exc:
        raise click.ClickException(f"cannot read configuration {spec}: {exc.strerror}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"{spec}: invalid JSON: {exc}")


def _load(spec: str) -> SchottkySystem:
    return load_system(_read_config(spec))


def _validated(system: SchottkySystem) -> SchottkySystem:
    report = validate(system)
    if not report.passed:
        bad = report.first_failure()
        raise ValidationFailed(f"validation failed at check {bad.name!r}: {bad.detail}")
    return report.system


def _interval(text: str | None, what: str):
    if text is None:
        return None
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise click.BadParameter(f"expected LO:HI, got {text!r}", param_hint=what)
    if not a < b:
        raise click.BadParameter("LO must be below HI", param_hint=what)
    return a, b


def _ball(text: str, system: SchottkySystem) -> FlagBall:
    """``c:r``: radius ``r`` around the attracting flag of letter ``c``."""
    try:
        name, radius = text.rsplit(":", 1)
        word = fg.parse_word(name, system.num_generators)
        radius = float(radius)
    except (ValueError, WeylCensusError):
        raise click.BadParameter(f"expected LETTER:RADIUS, got {text!r}")
    if len(word) != 1 or not 0 < radius <= 1:
        raise click.BadParameter(f"ball {text!r} needs a single letter and a radius in (0, 1]")
    return FlagBall(system.fixed_flags()[word[0]], radius)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="weyl-census")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Orbit and closed-geodesic census for Schottky groups in SL(d,R)."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")


@main.command("validate")
@click.argument("config")
@click.option("-o", "--output", default="validation.json", show_default=True,
              type=click.Path(dir_okay=False), help="Where to write the JSON report.")
def cmd_validate(config, output):
    """Check regularity, transversality and the ping-pong certificate."""
    report = validate(_load(config))
    dump_json(report.to_dict(), output)
    for c in report.checks:
        click.echo(f"{c.name:16s} {'pass' if c.passed else 'FAIL'}  margin={c.margin:.6g}"
                   + (f"  ({c.detail})" if c.detail and not c.passed else ""))
    if not report.passed:
        raise ValidationFailed(f"validation failed at check {report.first_failure().name!r}")


@main.command("census")
@click.argument("config")
@click.option("-L", "max_len", type=click.IntRange(min=1), required=True,
              help="Maximal word length.")
@click.option("-o", "--outdir", type=click.Path(file_okay=False), required=True)
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Worker threads [env WEYL_CENSUS_THREADS, default 1].")
@click.option("--budget", type=click.IntRange(min=1), default=10**8, show_default=True,
              help="Maximal number of records.")
@click.option("--no-flags", is_flag=True, help="Skip Cartan flags (no directional counts).")
@click.option("--force", is_flag=True, help="Rebuild even if a matching census exists.")
def cmd_census(config, max_len, outdir, threads, budget, no_flags, force):
    """Enumerate every reduced word up to length L and write the table."""
    system = _load(config)
    fp = system_fingerprint(system)
    side = Path(outdir) / "census.json"
    if not force and side.exists() and (Path(outdir) / CACHE_NAME).exists():
        meta = json.loads(side.read_text())
        if meta.get("fingerprint") == fp and meta.get("max_word_length") == max_len:
            click.echo(f"census up to date in {outdir} ({meta['records']} records)")
            return
    system = _validated(system)
    n = resolve_threads(threads)
    log.info("building census to length %d on %d thread(s)", max_len, n)
    table = build_census(system, max_len, with_flags=not no_flags, threads=n, budget=budget)
    paths = write_census(table, outdir)
    click.echo(f"{len(table)} records, horizon_R={table.horizon_R:.6g}, "
               f"horizon_t={table.horizon_t:.6g} -> {paths['csv']}")


@main.command("report")
@click.argument("config")
@click.option("--census", "census_path", required=True, type=click.Path(),
              help="Census directory or CSV written by the census command.")
@click.option("-o", "--outdir", type=click.Path(file_okay=False), default=None,
              help="Output directory [default: alongside the census].")
@click.option("--window", default=None, help="Fit window R1:R2 for the critical exponent.")
@click.option("--class-window", default=None, help="Window t1:t2 for the class counts.")
@click.option("--ballA", "ball_a", default="a:0.2", show_default=True,
              help="Ball LETTER:RADIUS around that letter's attracting flag.")
@click.option("--ballB", "ball_b", default="A:0.2", show_default=True)
@click.option("--bins", type=click.IntRange(min=5), default=40, show_default=True)
@click.option("--no-plots", is_flag=True, help="Skip the PNG figures.")
def cmd_report(config, census_path, outdir, window, class_window, ball_a, ball_b, bins,
               no_plots):
    """Growth report: critical exponent, ratio tables, Benoist gap, cone."""
    system = _load(config)
    table = load_census(census_path, system_fingerprint(system))
    src = Path(census_path)
    out = Path(outdir) if outdir else (src if src.is_dir() else src.parent)
    out.mkdir(parents=True, exist_ok=True)

    delta = estimate_delta(table, _interval(window, "--window"))
    rep = theorem_report(table, delta, class_window=_interval(class_window, "--class-window"),
                         bins=bins)
    if table.flags is not None:
        system = _validated(system)
        A, B = _ball(ball_a, system), _ball(ball_b, system)
        grid = rep.orbit.x
        n_ab = directional_counts(table, grid, A, B)
        n_all = orbit_counts(table, grid)
        frac = np.where(n_all > 0, n_ab / np.maximum(n_all, 1), 0.0)
        upper = rep.orbit.in_window() & (grid >= 0.5 * sum(rep.orbit.window))
        rep.directional = {
            "ballA": ball_a, "ballB": ball_b,
            "excluded_undefined_flags": int(np.count_nonzero(~table.flag_defined)),
            "min_fraction_upper_window": float(frac[upper].min()) if upper.any() else None,
        }
        _write_rows(out / "directional.csv", ["R", "count", "count_AB", "fraction"],
                    zip(grid, n_all, n_ab, frac))

    data = {"fingerprint": table.fingerprint, "max_word_length": table.max_len,
            "horizon_R": table.horizon_R, "horizon_t": table.horizon_t,
            "residuals": delta.residuals, **rep.to_dict()}
    dump_json(data, out / "report.json")
    for name, rt in (("orbit_ratio.csv", rep.orbit), ("class_ratio.csv", rep.classes)):
        _write_rows(out / name, ["R_or_t", "count", "ratio_lower", "ratio_upper"],
                    zip(rt.x, rt.count, rt.ratio_lower, rt.ratio_upper))
    _write_rows(out / "benoist.csv", ["word_len", "max_gap"], sorted(rep.benoist.per_length.items()))

    if not no_plots:
        from .plots import plot_benoist, plot_cone, plot_ratio_table
        plot_ratio_table(rep.orbit, out / "orbit_ratio.png")
        plot_ratio_table(rep.classes, out / "class_ratio.png", rank=rep.rank)
        plot_benoist(rep.benoist, out / "benoist_gap.png")
        if rep.cone is not None:
            plot_cone(rep.cone, out / "cone.png")

    rows = [("records", len(table)), ("horizon_R", table.horizon_R),
            ("horizon_t", table.horizon_t), ("delta_hat", rep.delta_hat),
            ("delta_stderr", delta.stderr), ("class_slope", rep.class_slope),
            ("orbit_ratio", "%.4g..%.4g" % rep.orbit.band("ratio_upper")),
            ("class_ratio_t", "%.4g..%.4g" % rep.classes.band("ratio_upper")),
            (f"class_ratio_t^{rep.rank}", "%.4g..%.4g" % rep.classes.band("ratio_lower")),
            ("benoist_M_hat", rep.benoist_M_hat)]
    if rep.cone is not None:
        rows += [("alpha_hat", rep.alpha_hat), ("min_wall_gap", rep.min_wall_gap)]
    if rep.directional and rep.directional["min_fraction_upper_window"] is not None:
        rows.append(("directional_frac", rep.directional["min_fraction_upper_window"]))
    for k, v in rows:
        click.echo(f"{k:18s} {v:.6g}" if isinstance(v, float) else f"{k:18s} {v}")
    click.echo(f"written to {out}")


@main.group("presets")
def cmd_presets():
    """Shipped demo systems."""


@cmd_presets.command("list")
def presets_list():
    for name in preset_names():
        click.echo(f"{name:6s} {PRESETS[name][0]}")


@cmd_presets.command("emit")
@click.argument("name", type=click.Choice(preset_names()))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
def presets_emit(name, output):
    """Print (or write) a preset's configuration document."""
    text = json.dumps(preset_config(name), indent=2, sort_keys=True) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)


def run(argv=None) -> int:
    """Entry point returning the exit code instead of raising ``SystemExit``."""
    try:
        main.main(args=argv, prog_name="weyl-census", standalone_mode=False)
    except ValidationFailed as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INVALID
    except _VALIDATION_ERRORS as exc:
        click.echo(f"error: validation failed: {exc}", err=True)
        return EXIT_INVALID
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_ERROR
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except (WeylCensusError, OSError, KeyError, ValueError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_ERROR
    return EXIT_OK


def entry() -> None:
    sys.exit(run())


if __name__ == "__main__":
    entry()
