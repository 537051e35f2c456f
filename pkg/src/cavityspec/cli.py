"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 verification ran but some rows fell outside tolerance (report written).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import sweep
from .config import Config, ConfigError, load_config, to_job
from .output import emit_csv, emit_json, emit_plot, emit_spectrum_csv
from .params import angular_to_mhz, cavity_emission_fraction, derive_params, enhanced_emission_rate
from .weakfield import peak_report, split_thresholds

log = logging.getLogger("cavityspec")

COMMANDS = ("params", "spectrum", "peaks", "inset", "fig1", "fig4", "oracle-compare")
OUT_ENV = "CAVITYSPEC_OUT"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TOLERANCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cavityspec", description="Weak-field cavity QED spectra with a master-equation oracle.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", help="output directory (overrides config and $%s)" % OUT_ENV)
    parser.add_argument("--no-oracle", action="store_true", help="skip master-equation evaluations")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for oracle sweeps")
    return parser


def _mhz(w):
    return None if w is None else angular_to_mhz(w)


def _tag(c: float) -> str:
    return f"C{c!r}"


class Runner:
    def __init__(self, config: Config, outdir: Path, args):
        self.config = config
        self.outdir = outdir
        self.formats = set(config.output.formats)
        self.oracle = False if args.no_oracle else None
        self.workers = args.jobs

    def job(self, kind):
        return to_job(self.config, kind, self.oracle, self.workers)

    def path(self, name):
        return self.outdir / name

    def params(self) -> int:
        rates = self.config.rates.rates()
        d = derive_params(rates)
        c1p, frac = cavity_emission_fraction(rates)
        g, k, gm = self.config.rates.mhz()
        print(f"g/2pi_MHz={g!r} kappa/2pi_MHz={k!r} gamma/2pi_MHz={gm!r}")
        print(f"C1={d.c1:.6g}")
        for n in self.config.job.n_list or [1]:
            print(f"C(N={n})={n * d.c1:.6g}")
        print(f"n0={d.n_sat:.6g}")
        print(f"gamma(1+2C1)/2pi_MHz={angular_to_mhz(enhanced_emission_rate(rates)):.6g}")
        print(f"C1'={c1p:.6g}")
        print(f"escape_fraction={frac:.6g}")
        if "json" in self.formats:
            emit_json(
                {"c1": d.c1, "n0": d.n_sat, "c1_prime": c1p, "escape_fraction": frac,
                 "enhanced_rate_MHz": angular_to_mhz(enhanced_emission_rate(rates))},
                self.path("params.json"),
            )
        return EXIT_OK

    def spectrum(self) -> int:
        for c, res in sweep.run_spectra(self.job("spectrum")):
            if "csv" in self.formats:
                emit_spectrum_csv(res, self.path(f"spectrum_{_tag(c)}.csv"))
            if "svg" in self.formats:
                x = angular_to_mhz(res.grid)
                r = res.response
                emit_plot(
                    [("X", x, r.X), ("F_cross", x, r.F_cross), ("p_sq", x, r.p_sq)],
                    self.path(f"spectrum_{_tag(c)}.svg"),
                    title=f"C = {c:g}",
                )
        return EXIT_OK

    def peaks(self) -> int:
        job = self.job("spectrum")
        th_x, th_xp = split_thresholds(job.rates)
        print(f"threshold_C_X={th_x:.6g} threshold_C_xp={th_xp:.6g}")
        header = ("C", "omega_X_over_2pi_MHz", "omega_xp_over_2pi_MHz", "height_X", "height_xp",
                  "is_doublet_X", "is_doublet_xp", "numeric_X_over_2pi_MHz", "numeric_xp_over_2pi_MHz")
        rows = []
        for c in job.cooperativities():
            p = peak_report(job.rates.with_c(c))
            rows.append((c, _mhz(p.omega_X), _mhz(p.omega_xp), p.height_X, p.height_xp, p.is_doublet_X,
                         p.is_doublet_xp, _mhz(p.numeric_X), _mhz(p.numeric_xp)))
            print(f"C={c:g} omega_X/2pi={_fmt(_mhz(p.omega_X))} omega_xp/2pi={_fmt(_mhz(p.omega_xp))} MHz")
        self._table(header, rows, "peaks")
        return EXIT_OK

    def inset(self) -> int:
        res = sweep.run_inset(self.job("inset"))
        cv = res.curves
        header = ("C", "X0", "F_cross0", "p_sq0")
        self._table(header, cv.rows(), "inset")
        if "svg" in self.formats:
            emit_plot([("X(0)", cv.c, cv.X), ("F_cross(0)", cv.c, cv.F_cross), ("p_sq(0)", cv.c, cv.p_sq)],
                      self.path("inset.svg"), xlabel="C")
        print(f"argmax_C_F_cross0={res.argmax_c:.6g} max_F_cross0={res.max_f_cross:.12g}")
        return EXIT_OK

    def fig1(self) -> int:
        res = sweep.run_fig1(self.job("fig1"))
        series = []
        for c, spec in zip(res.c_list, res.spectra):
            x = angular_to_mhz(spec.grid)
            if "csv" in self.formats:
                emit_spectrum_csv(spec, self.path(f"fig1_{_tag(c)}.csv"))
            series.append((f"C = {c:g}", x, spec.response.F_cross))
        if "svg" in self.formats:
            emit_plot(series, self.path("fig1.svg"), title="F_cross")
        summary = {
            "c_list": list(res.c_list),
            "transition_bracket": list(res.transition) if res.transition else None,
            "threshold_C_xp": res.threshold_xp,
            "peak_height_xp": [s.peaks.height_xp for s in res.spectra],
        }
        if "json" in self.formats:
            emit_json(summary, self.path("fig1_summary.json"))
        print(f"transition_bracket={summary['transition_bracket']} threshold_C_xp={res.threshold_xp:.6g}")
        return EXIT_OK

    def fig4(self) -> int:
        res = sweep.run_fig4(self.job("fig4"))
        header = ("C", "N", "omega_X_over_2pi_MHz", "omega_xp_over_2pi_MHz", "numeric_X_over_2pi_MHz",
                  "numeric_xp_over_2pi_MHz", "oracle_X_over_2pi_MHz")
        rows = [(r.c, r.n_atoms, _mhz(r.omega_X), _mhz(r.omega_xp), _mhz(r.numeric_X), _mhz(r.numeric_xp),
                 _mhz(r.oracle_X)) for r in res.rows]
        self._table(header, rows, "fig4", note=res.note)
        if "svg" in self.formats:
            series = []
            for label, attr in (("Omega_X", "omega_X"), ("Omega_xp", "omega_xp")):
                pts = [(r.c, _mhz(getattr(r, attr))) for r in res.rows if getattr(r, attr) is not None]
                if len(pts) >= 2:
                    series.append((label, [p[0] for p in pts], [p[1] for p in pts]))
                else:
                    log.warning("fig4: %s has fewer than two points above threshold; not plotted", label)
            if series:
                emit_plot(series, self.path("fig4.svg"), xlabel="C", ylabel="Ω/2π (MHz)", title=res.note)
        print(f"thresholds_C_X={res.thresholds[0]:.6g} C_xp={res.thresholds[1]:.6g}")
        return EXIT_OK

    def oracle_compare(self) -> int:
        report = sweep.run_oracle_compare(self.job("oracle-compare"))
        header = ("N", "y", "omega_over_2pi_MHz", "X_analytic", "X_oracle", "abs_gap", "rel_gap",
                  "rtol", "atol", "passed")
        rows = [(r.n_atoms, r.y, angular_to_mhz(r.omega), r.X_analytic, r.X_oracle, r.abs_gap, r.rel_gap,
                 r.rtol, r.atol, r.passed) for r in report.rows]
        # always write the csv: a failed verification must leave a report behind
        emit_csv(header, rows, self.path("oracle_compare.csv"))
        if report.fits:
            emit_csv(
                ("N", "omega_over_2pi_MHz", "y_values", "exponent", "target", "tolerance", "passed"),
                [(f.n_atoms, angular_to_mhz(f.omega), " ".join(repr(y) for y in f.y_values), f.exponent,
                  sweep.EXPONENT_TARGET, sweep.EXPONENT_TOL, f.passed) for f in report.fits],
                self.path("oracle_scaling.csv"),
            )
        if "json" in self.formats:
            emit_json({"header": list(header), "rows": [list(r) for r in rows], "passed": report.passed},
                      self.path("oracle_compare.json"))
        print(f"rows={len(report.rows)} fits={len(report.fits)} failed={report.n_failed}")
        return EXIT_OK if report.passed else EXIT_TOLERANCE

    def _table(self, header, rows, stem, note=None):
        if "csv" in self.formats:
            emit_csv(header, rows, self.path(f"{stem}.csv"))
        if "json" in self.formats:
            data = {"header": list(header), "rows": [list(r) for r in rows]}
            if note:
                data["note"] = note
            emit_json(data, self.path(f"{stem}.json"))


def _fmt(v):
    return "none" if v is None else f"{v:.6g}"


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = load_config(args.config)
        if args.jobs < 1:
            raise ConfigError(["--jobs must be >= 1"])
        outdir = Path(args.out or os.environ.get(OUT_ENV) or config.output.directory)
        runner = Runner(config, outdir, args)
        return getattr(runner, args.command.replace("-", "_"))()
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
