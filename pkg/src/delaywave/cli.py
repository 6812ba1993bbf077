"""Command-line entry point: simulate / certify / verify / sweep /
converge / report.

Exit codes: 0 ok, 2 invalid input, 3 diverged, 4 hypotheses fail,
5 data outside the smallness ball, 6 inequality violated.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import certify, functionals, scenario as scenario_mod, stepping
from .certify import CertificateError, HypothesesFailed
from .delays import ConfigurationError, ShiftedDelay
from .scenario import ScenarioError

CSV_COLUMNS = ["t", "E", "scriptE", "cbar_bound", "normU", "norm_ut",
               "ahalf_u", "psi", "k_t", "tau_t", "delayed_term_norm",
               "envelope_r2"]

EXIT_INVALID = 2
EXIT_DIVERGED = 3
EXIT_HYPOTHESES = 4
EXIT_DATA = 5
EXIT_VIOLATED = 6


def _fail(code, reason):
    click.echo(f"error: {reason}", err=True)
    sys.exit(code)


class Bundle:
    """Everything one scenario run needs, built once."""

    def __init__(self, scn, seed_override=None):
        self.scn = scn
        if seed_override is not None:
            scn = scn.with_overrides({"seed": int(seed_override)})
            self.scn = scn
        self.model = scn.build_model()
        self.cf = scn.build_coefficient()
        self.df = scn.build_delay()
        self.params = scn.build_nonlinearity(self.model)
        self.seed_g = scn.build_history_seed(self.model)
        self.u0, self.v0 = scn.build_initial_data(self.model)
        self.config = scn.build_stepper_config(self.model)
        self.semigroup = scn.build_semigroup()

    def run(self):
        return stepping.run(self.model, self.cf, self.df, self.seed_g,
                            self.u0, self.v0, self.config, beta=self.scn.beta)

    def certificate(self):
        return certify.build_certificate(
            self.model, self.cf, self.df, self.seed_g, self.u0, self.v0,
            params=self.params, semigroup=self.semigroup)

    def diagnostics(self, traj, cert=None, cbar_scale=1.0):
        return functionals.compute_diagnostics(
            self.model, traj, self.cf, self.df, self.seed_g,
            beta=self.scn.beta, certificate=cert, cbar_scale=cbar_scale)


def _load_bundle(path, seed):
    try:
        return Bundle(scenario_mod.load(path), seed_override=seed)
    except (ScenarioError, ConfigurationError) as exc:
        _fail(EXIT_INVALID, exc)


def write_trajectory_csv(path, diag):
    rows = np.column_stack([
        diag.times, diag.energy, diag.script_e, diag.cbar_bound,
        diag.norm_u_state, diag.norm_ut, diag.ahalf_u, diag.psi,
        diag.k_t, diag.tau_t, diag.delayed_term_norm, diag.envelope_r2,
    ])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([format(x, ".17g") for x in row])


def fit_summary(times, norms, window=None):
    """Log-linear decay fit over the shared default window [t_max/2, t_max]."""
    tmax = float(times[-1])
    if window is None:
        window = (tmax / 2.0, tmax)
    amp, rate, resid = functionals.fit_decay_rate(times, norms, window)
    return {"fitted_rate": rate, "fitted_amplitude": amp,
            "fit_residual": resid, "fit_window": list(window)}


@click.group()
def main():
    """Numerical laboratory for the delayed damped wave equation."""


def _scenario_options(fn):
    fn = click.option("--scenario", "scenario_path", required=True,
                      help="scenario file or preset name")(fn)
    fn = click.option("--out", "out_dir", default=".",
                      help="output directory")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="override the scenario seed")(fn)
    return fn


@main.command()
@_scenario_options
def simulate(scenario_path, out_dir, seed):
    """Run one scenario and write the diagnostic time series CSV."""
    bundle = _load_bundle(scenario_path, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj = bundle.run()
    try:
        cert = bundle.certificate()
    except CertificateError:
        cert = None
    diag = bundle.diagnostics(traj, cert)
    write_trajectory_csv(out / "trajectory.csv", diag)
    if traj.status == "diverged":
        click.echo(f"diverged at t={traj.diverged_at}", err=True)
        sys.exit(EXIT_DIVERGED)
    click.echo(f"wrote {out / 'trajectory.csv'} "
               f"({len(diag.times)} samples, status={traj.status})")


@main.command("certify")
@_scenario_options
def certify_command(scenario_path, out_dir, seed):
    """Build the constants chain and certify the initial data."""
    bundle = _load_bundle(scenario_path, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        cert = bundle.certificate()
    except HypothesesFailed as exc:
        doc = {"hypotheses_passed": False, "reason": str(exc),
               "K": exc.report.K, "tau_bar": exc.report.tau_bar}
        (out / "certificate.json").write_text(json.dumps(doc, indent=2))
        _fail(EXIT_HYPOTHESES, f"hypotheses fail: {exc}")
    except CertificateError as exc:
        _fail(EXIT_HYPOTHESES, f"certificate unavailable: {exc}")
    doc = cert.to_dict()
    doc["hypotheses_passed"] = True
    (out / "certificate.json").write_text(json.dumps(doc, indent=2))
    if not cert.data.passed:
        _fail(EXIT_DATA, f"initial data not certified: {cert.data.detail}")
    click.echo(f"certified: rho={cert.chain.rho:.6g} "
               f"rate_r2={cert.rate_r2:.6g} -> {out / 'certificate.json'}")
    return cert


@main.command()
@_scenario_options
@click.option("--cbar-scale", type=float, default=1.0,
              help="testing hook: scale the Gronwall coefficient")
def verify(scenario_path, out_dir, seed, cbar_scale):
    """Simulate, then check every certified inequality along the run."""
    bundle = _load_bundle(scenario_path, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj = bundle.run()
    if traj.status == "diverged":
        _fail(EXIT_DIVERGED, f"trajectory diverged at t={traj.diverged_at}")
    try:
        cert = bundle.certificate()
    except CertificateError:
        cert = None
    diag = bundle.diagnostics(traj, cert, cbar_scale=cbar_scale)
    dt = bundle.config.dt
    cbar_T = cert.chain.cbar_T * cbar_scale if cert else 1.0
    reports = [
        functionals.check_prop_bound(diag, dt),
        functionals.check_lower_bound(diag, bundle.params, cbar_T, dt),
        functionals.check_envelope(diag, dt),
    ]
    doc = {r.name: {"passed": r.passed, "vacuous": r.vacuous,
                    "first_violation_t": r.first_violation_t,
                    "detail": r.detail} for r in reports}
    (out / "verify.json").write_text(json.dumps(doc, indent=2))
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        if r.vacuous:
            status += " (vacuous)"
        click.echo(f"{r.name}: {status}" + (f" [{r.detail}]" if r.detail else ""))
    bad = [r for r in reports if not r.passed]
    if bad:
        _fail(EXIT_VIOLATED, f"inequality violated: {bad[0].name} "
                             f"at t={bad[0].first_violation_t}")


@main.command()
@_scenario_options
@click.option("--eps", "eps_list", required=True,
              help="comma-separated positive delay shifts")
def converge(scenario_path, out_dir, seed, eps_list):
    """Vanishing-delay study: rerun with tau + eps and compare."""
    bundle = _load_bundle(scenario_path, seed)
    try:
        eps = [float(x) for x in eps_list.split(",") if x.strip() != ""]
    except ValueError:
        _fail(EXIT_INVALID, f"eps: cannot parse {eps_list!r}")
    if not eps:
        _fail(EXIT_INVALID, "eps: empty list")
    if any(e < 0.0 or e > 1.0 for e in eps):
        _fail(EXIT_INVALID, "eps: shifts must lie in [0, 1]")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    base = bundle.run()
    base_norms = base.state_norms(bundle.model)
    rows = []
    for e in eps:
        df_e = ShiftedDelay(bundle.df, e)
        traj = stepping.run(bundle.model, bundle.cf, df_e, bundle.seed_g,
                            bundle.u0, bundle.v0, bundle.config,
                            beta=bundle.scn.beta)
        n = min(len(base_norms), len(traj.times))
        sup = float(np.max(np.abs(traj.state_norms(bundle.model)[:n]
                                  - base_norms[:n])))
        rows.append((e, sup))
    with open(out / "convergence.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eps", "sup_diff"])
        for e, sup in sorted(rows, reverse=True):
            writer.writerow([format(e, ".17g"), format(sup, ".17g")])
    ordered = [sup for _, sup in sorted(rows, reverse=True)]
    click.echo("eps -> sup diff: " +
               ", ".join(f"{e:g}:{s:.3e}" for e, s in sorted(rows, reverse=True)))
    decreasing = all(a > b or (a == b == 0.0)
                     for a, b in zip(ordered, ordered[1:]))
    if not decreasing:
        _fail(EXIT_VIOLATED, "sup differences are not decreasing in eps")


@main.command()
@_scenario_options
@click.option("--param", required=True, help="parameter name or dotted path")
@click.option("--values", "values_list", required=True,
              help="comma-separated values")
def sweep(scenario_path, out_dir, seed, param, values_list):
    """One run per parameter value; fitted rate and certificate status each."""
    bundle = _load_bundle(scenario_path, seed)
    try:
        values = [float(x) for x in values_list.split(",") if x.strip() != ""]
    except ValueError:
        _fail(EXIT_INVALID, f"values: cannot parse {values_list!r}")
    if not values:
        _fail(EXIT_INVALID, "values: empty list")
    path = scenario_mod.resolve_param(param)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for value in values:
        try:
            sub = Bundle(bundle.scn.with_overrides({path: value}))
        except (ScenarioError, KeyError, ConfigurationError) as exc:
            _fail(EXIT_INVALID, f"override {path}={value}: {exc}")
        traj = sub.run()
        norms = traj.state_norms(sub.model)
        try:
            summary = fit_summary(traj.times, norms)
            rate = summary["fitted_rate"]
        except ValueError:
            rate = math.nan
        if traj.status == "diverged":
            status, margin = "diverged", math.nan
        else:
            try:
                cert = sub.certificate()
                status = "certified" if cert.data.passed else "data-outside-ball"
                margin = cert.data.ball_margin
            except CertificateError:
                status, margin = "hypotheses-fail", math.nan
        rows.append((value, rate, status, margin))
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([param, "fitted_rate", "certificate_status",
                         "rho_margin"])
        for value, rate, status, margin in rows:
            writer.writerow([format(value, ".17g"), format(rate, ".17g"),
                             status, format(margin, ".17g")])
    click.echo(f"wrote {out / 'sweep.csv'} ({len(rows)} rows)")


@main.command()
@click.option("--out", "out_dir", default=".",
              help="directory holding trajectory.csv (and certificate.json)")
def report(out_dir):
    """Summarize a finished run as JSON on stdout."""
    out = Path(out_dir)
    csv_path = out / "trajectory.csv"
    if not csv_path.exists():
        _fail(EXIT_INVALID, f"no trajectory.csv in {out}")
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    if data.size < 10:
        _fail(EXIT_INVALID, "trajectory too short to report on")
    summary = {"samples": int(data.size), "t_end": float(data["t"][-1])}
    try:
        summary.update(fit_summary(data["t"], data["normU"]))
    except ValueError as exc:
        summary["fit_error"] = str(exc)
    cert_path = out / "certificate.json"
    if cert_path.exists():
        summary["certificate"] = json.loads(cert_path.read_text())
    click.echo(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
