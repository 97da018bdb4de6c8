"""Command-line interface: solve, verify, family, radial, cones, forms-check.

Outputs are CSV files (decimal point, comma separator, LF line endings) plus
a printed summary.  Randomized suites draw from a seeded PCG64 generator
recorded in the report header, so fixed seed and config give byte-identical
outputs.  Exit codes: 0 success, 2 cone-exit, 3 non-convergence,
4 invariant violation, 5 bad config.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import eigencone, forms, radial
from .config import parse_config
from .errors import ConeExitError, ConfigError, DomainError
from .grid import field_to_csv, write_field
from .harness import FamilySpec, audit_solve, family_run
from .solver import TorusProblem, manufactured_problem, newton_solve

EXIT_OK = 0
EXIT_CONE = 2
EXIT_MAXITER = 3
EXIT_INVARIANT = 4
EXIT_CONFIG = 5


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, rows, comments=()):
    with open(path, "w", newline="\n") as fh:
        for comment in comments:
            fh.write(f"# {comment}\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _ensure_outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _load_problem(path):
    if path == "manufactured":
        problem, _ = manufactured_problem()
        return problem
    spec = parse_config(path)
    if not isinstance(spec, TorusProblem):
        raise ConfigError(f"cli: {path} defines a family, expected a single problem")
    return spec


def _print_table(rows):
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    for row in rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(row, widths)))


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def cmd_solve(args):
    problem = _load_problem(args.config)
    out = _ensure_outdir(args.output)
    try:
        result = newton_solve(problem)
    except ConeExitError as exc:
        print(f"solve: {exc}", file=sys.stderr)
        return EXIT_CONE
    header = [
        "c", "osc", "grad_sup", "hess_sup", "min_alpha_eig",
        "iterations", "final_residual", "converged",
    ]
    row = [
        result.c, result.osc, result.grad_sup, result.hess_sup,
        result.min_alpha_eig, result.iterations, result.final_residual,
        result.converged,
    ]
    _write_csv(os.path.join(out, "solve.csv"), [header, row])
    _write_csv(
        os.path.join(out, "residuals.csv"),
        [["iteration", "sup_residual"]]
        + [[i, r] for i, r in enumerate(result.residual_history)],
    )
    write_field(os.path.join(out, "u.n1ma"), result.u)
    field_to_csv(os.path.join(out, "u.csv"), result.u)
    _print_table([header, [_cell(v) for v in row]])
    return EXIT_OK if result.converged else EXIT_MAXITER


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _random_suite_rows(seed, spectra_samples, forms_trials):
    rng = np.random.default_rng(seed)
    rows = []

    for n in (3, 4, 5):
        lam = eigencone.sample_spectra(rng, spectra_samples, n)
        psh = eigencone.is_psh(lam)
        sh2 = eigencone.is_m_subharmonic(lam, 2, 1e-12)
        n1 = eigencone.is_n1_psh(lam, 1e-12)
        sh1 = eigencone.is_m_subharmonic(lam, 1, 1e-12)
        bad = int((psh & ~sh2).sum() + (sh2 & ~n1).sum() + (n1 & ~sh1).sum())
        rows.append([f"cone_inclusions_n{n}", bad, 0, bad == 0])

    pts = eigencone.sample_cone_points(rng, spectra_samples, 3)
    gap = eigencone.amgm_trace_gap_batch(pts["beta"], pts["omega"], pts["hess"])
    rows.append(["amgm_trace_gap_min", float(gap.min()), -1e-12, bool(gap.min() >= -1e-12)])

    lam = rng.uniform(-1.0, 4.0, size=(spectra_samples, 3))
    pgap = eigencone.psh_product_gap(lam)
    rows.append(["psh_product_gap_min", float(pgap.min()), -1e-12, bool(pgap.min() >= -1e-12)])

    worst = 0.0
    agree = True
    for _ in range(forms_trials):
        h = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        h = 0.5 * (h + h.conj().T)
        worst = max(worst, forms.hat_identity_residual(h, 3))
        agree = agree and forms.equivalence_suite(h, 3, rng=rng).agree
    rows.append(["hat_identity_max_residual", worst, 1e-12, worst <= 1e-12])
    rows.append(["equivalence_agreement", agree, True, agree])
    return rows


def cmd_verify(args):
    problem = _load_problem(args.config)
    out = _ensure_outdir(args.output)
    try:
        result = newton_solve(problem)
    except ConeExitError as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return EXIT_CONE
    if not result.converged:
        print("verify: solver did not converge", file=sys.stderr)
        return EXIT_MAXITER

    audit = audit_solve(problem, result)
    rows = [["check", "value", "threshold", "pass"]]
    rows.append(["converged", True, True, True])
    rows.append(["c_upper_bound", audit.c_upper - audit.c, 0.0, audit.c_upper_ok])
    rows.append(["mass_identity", audit.mass_ok, True, audit.mass_ok])
    rows.append(["amgm_min_gap", audit.amgm_min_gap, -1e-9, audit.amgm_min_gap >= -1e-9])

    # density scaling: doubling f must leave u fixed and halve c
    scaled = newton_solve(problem.with_density(2.0 * problem.f), u0=result.u)
    u_shift = float(np.abs(scaled.u - result.u).max())
    c_rel = abs(scaled.c * 2.0 - result.c) / result.c
    rows.append(["density_scaling_u", u_shift, 1e-9, u_shift <= 1e-9])
    rows.append(["density_scaling_c", c_rel, 1e-9, c_rel <= 1e-9])

    rows.extend(_random_suite_rows(args.seed, args.samples, args.trials))

    _write_csv(
        os.path.join(out, "verify.csv"),
        rows,
        comments=[f"generator=PCG64 seed={args.seed}"],
    )
    _print_table([[_cell(v) for v in row] for row in rows])
    ok = all(bool(row[3]) for row in rows[1:])
    return EXIT_OK if ok else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# family
# ---------------------------------------------------------------------------


def cmd_family(args):
    spec = parse_config(args.config)
    if not isinstance(spec, FamilySpec):
        raise ConfigError(f"cli: {args.config} does not define a family")
    out = _ensure_outdir(args.output)
    report = family_run(spec)
    _write_csv(os.path.join(out, "family.csv"), report.csv_rows())
    print(f"fibers: {len(report.rows)}  uniformity sup_t (c + 1/c + osc): {report.uniformity!r}"
          f"  budget: {report.budget!r}")
    _print_table([[_cell(v) for v in row] for row in report.csv_rows()])
    failures = [row.failure for row in report.rows if not row.converged]
    if "cone-exit" in failures:
        return EXIT_CONE
    if failures:
        return EXIT_MAXITER
    audits_ok = all(row.audit.all_ok for row in report.rows)
    if not (report.within_budget and audits_ok):
        return EXIT_INVARIANT
    return EXIT_OK


# ---------------------------------------------------------------------------
# radial
# ---------------------------------------------------------------------------


def cmd_radial(args):
    out = _ensure_outdir(args.output)
    profile = radial.standard_profiles()["logloglog"]
    rows = [["r", "lambda_hat_1", "lambda_hat_j", "ma_hat"]]
    for r in profile.radii(args.n, count=25):
        lam1, lamj = radial.radial_hat_eigenvalues(profile, r, args.n)
        rows.append([float(r), lam1, lamj, radial.radial_ma_hat(profile, r, args.n)])
    _write_csv(os.path.join(out, "radial.csv"), rows)

    spec = radial.ShellIntegrand(
        p=args.p, n=args.n,
        r_inner=math.exp(-math.e**2), r_outer=math.exp(-math.e),
    )
    report = radial.integral_threshold(spec, args.levels)
    threshold_rows = [["p", "level", "partial_integral", "verdict"]]
    for lvl in report.levels:
        threshold_rows.append([args.p, lvl.level, lvl.partial_integral, report.verdict])
    _write_csv(os.path.join(out, "threshold.csv"), threshold_rows)
    print(f"threshold: n={args.n} p={args.p} verdict={report.verdict}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------


def cmd_cones(args):
    out = _ensure_outdir(args.output)
    rows = [["check", "value", "threshold", "pass"]]
    rows.extend(_random_suite_rows(args.seed, args.samples, forms_trials=0)[:-2])

    rng = np.random.default_rng(args.seed + 1)
    lam = eigencone.sample_spectra(rng, args.samples, 4)
    inv_c = rng.uniform(0.1, 2.0, size=(args.samples, 1))
    gamma = inv_c + rng.uniform(0.0, 3.0, size=(args.samples, 4))
    small = eigencone.is_quasi_n1_psh(lam, np.broadcast_to(inv_c, lam.shape))
    quasi = eigencone.is_quasi_n1_psh(lam, gamma, 1e-12)
    bad = int((small & ~quasi).sum())
    rows.append(["quasi_cone_inclusion", bad, 0, bad == 0])

    _write_csv(
        os.path.join(out, "cones.csv"), rows,
        comments=[f"generator=PCG64 seed={args.seed}"],
    )
    _print_table([[_cell(v) for v in row] for row in rows])
    return EXIT_OK if all(bool(r[3]) for r in rows[1:]) else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# forms-check
# ---------------------------------------------------------------------------


def cmd_forms_check(args):
    out = _ensure_outdir(args.output)
    rng = np.random.default_rng(args.seed)
    worst_hat = 0.0
    worst_star = 0.0
    disagreements = 0
    for _ in range(args.trials):
        h = rng.standard_normal((args.n, args.n)) + 1j * rng.standard_normal((args.n, args.n))
        h = 0.5 * (h + h.conj().T)
        worst_hat = max(worst_hat, forms.hat_identity_residual(h, args.n))
        if not forms.equivalence_suite(h, args.n, rng=rng).agree:
            disagreements += 1
        for (p, q) in ((1, 1), (2, 1)):
            shape = (
                len(forms._combos(args.n, p)),
                len(forms._combos(args.n, q)),
            )
            a = forms.PQForm(
                args.n, p, q,
                rng.standard_normal(shape) + 1j * rng.standard_normal(shape),
            )
            twice = forms.hodge_star(forms.hodge_star(a, np.eye(args.n)), np.eye(args.n))
            err = (twice - a * float((-1) ** (p + q))).max_norm()
            worst_star = max(worst_star, err / max(1.0, a.max_norm()))
    rows = [
        ["check", "value", "threshold", "pass"],
        ["hat_identity_max_residual", worst_hat, 1e-12, worst_hat <= 1e-12],
        ["double_star_sign_max_err", worst_star, 1e-12, worst_star <= 1e-12],
        ["equivalence_disagreements", disagreements, 0, disagreements == 0],
    ]
    _write_csv(
        os.path.join(out, "forms.csv"), rows,
        comments=[f"generator=PCG64 seed={args.seed}"],
    )
    _print_table([[_cell(v) for v in row] for row in rows])
    return EXIT_OK if all(bool(r[3]) for r in rows[1:]) else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="n1ma", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem config")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", default=".")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("verify", help="solve and audit the estimate structure")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", default=".")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("family", help="solve a deformation family")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", default=".")
    p.set_defaults(fn=cmd_family)

    p = sub.add_parser("radial", help="radial eigenvalue sweep and threshold table")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--levels", type=int, default=12)
    p.add_argument("-o", "--output", default=".")
    p.set_defaults(fn=cmd_radial)

    p = sub.add_parser("cones", help="randomized cone inclusion and gap audits")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=".")
    p.set_defaults(fn=cmd_cones)

    p = sub.add_parser("forms-check", help="randomized form algebra audits")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=".")
    p.set_defaults(fn=cmd_forms_check)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
