"""Command-line entry point: solve, experiment, path, eigen, audit.

Every subcommand takes ``--config`` (a file path or a builtin scenario id such
as E1), ``--out`` for the output directory, ``--seed`` to override the config
seed, and ``--quiet``. Outputs are CSV files with "." decimals, 17 significant
digits, and LF line endings, plus ``audit.txt`` for assumption audits.

Exit codes: 0 success, 2 config error, 3 solver non-convergence, 4 internal
invariant violation. A run that diagnoses an unbounded-below energy exits with
0: the diagnosis is the result, and it is recorded in the report.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .classify import classify_cone, comparability_delta, neumann_integral_condition
from .config import ScenarioConfig, load_config
from .errors import ConfigError, InvariantViolation, PlapLabError
from .grid import ScalarField
from .model import audit_diffusion, audit_growth, audit_subhomogeneity
from .paths import path_energy_profile, midpoint_energy_test, reaction_pullback_concavity
from .solve import (
    STATUS_NOT_BOUNDED_BELOW,
    SolveReport,
    first_eigenvalue,
    minimize,
    multi_start,
    random_start,
)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_solution(path: Path, field: ScalarField) -> None:
    grid = field.grid
    if grid.dimension == 1:
        header = ["node", "x", "value"]
        rows = [[i, grid.nodes[i, 0], field.values[i]] for i in range(grid.n_nodes)]
    else:
        header = ["node", "x", "y", "value"]
        rows = [
            [i, grid.nodes[i, 0], grid.nodes[i, 1], field.values[i]]
            for i in range(grid.n_nodes)
        ]
    _write_csv(path, header, rows)


def _load_field(source: str, ps) -> ScalarField:
    """A field from 'const:<value>' or from a solution.csv written by solve."""
    if source.startswith("const:"):
        try:
            value = float(source.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad constant field {source!r}") from exc
        return ScalarField.constant(ps.grid, value)
    try:
        with open(source, "r", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader)
            value_col = header.index("value")
            values = [float(row[value_col]) for row in reader]
    except (OSError, ValueError, StopIteration) as exc:
        raise ConfigError(f"cannot read solution file {source!r}: {exc}") from exc
    if len(values) != ps.grid.n_nodes:
        raise ConfigError(
            f"solution file {source!r} has {len(values)} values, grid needs "
            f"{ps.grid.n_nodes}"
        )
    return ScalarField(ps.grid, np.asarray(values))


def _initial_field(config: ScenarioConfig, ps, seed: int) -> ScalarField:
    if config.init_spec == "random":
        return random_start(ps, seed)
    value = float(config.init_spec.split(":", 1)[1])
    init = np.full(ps.grid.n_nodes, value)
    if ps.is_dirichlet:
        init[ps.grid.boundary_nodes] = 0.0
    return ScalarField(ps.grid, init)


def _classification_columns(cls) -> list:
    return [
        cls.kind,
        cls.positivity_margin,
        "" if cls.normal_derivative_margin is None else cls.normal_derivative_margin,
        len(cls.dead_core_regions),
        ";".join(str(len(region)) for region in cls.dead_core_regions),
    ]


_REPORT_HEADER = [
    "scenario_id",
    "start",
    "status",
    "converged",
    "iterations",
    "residual",
    "energy_total",
    "energy_diffusion",
    "energy_reaction",
    "classification",
    "positivity_margin",
    "normal_derivative_margin",
    "n_dead_core_regions",
    "dead_core_region_sizes",
    "cluster",
    "delta_vs_reference",
]


def _report_row(config, start, report: SolveReport, cls, cluster="", delta="") -> list:
    return [
        config.scenario_id,
        start,
        report.status,
        int(report.converged),
        report.iterations,
        report.residual,
        report.energy.total,
        report.energy.diffusion_part,
        report.energy.reaction_part,
        *(_classification_columns(cls) if cls is not None else ["", "", "", "", ""]),
        cluster,
        delta,
    ]


def _cmd_solve(config: ScenarioConfig, out: Path, seed, reference: str | None, say) -> int:
    ps = config.build_problem()
    opts = config.solve_options(seed)
    init = _initial_field(config, ps, opts.random_seed)
    report = minimize(ps, init, opts)
    cls = classify_cone(ps, report.solution) if report.status != "not_bounded_below" else None
    delta = ""
    if reference is not None and report.converged:
        ref = _load_field(reference, ps)
        comp = comparability_delta(report.solution, ref)
        delta = comp.delta if comp.comparable else "incomparable"
    _write_csv(out / "report.csv", _REPORT_HEADER, [_report_row(config, 0, report, cls, delta=delta)])
    _write_solution(out / "solution.csv", report.solution)
    say(
        f"{config.scenario_id}: {report.status} after {report.iterations} iterations, "
        f"energy {report.energy.total:.6g}, residual {report.residual:.3g}"
        + (f", classified {cls.kind}" if cls is not None else "")
    )
    if report.status == STATUS_NOT_BOUNDED_BELOW:
        say("energy decreased without bound; no minimizer exists for this configuration")
        return 0
    return 0 if report.converged else 3


def _cmd_experiment(config: ScenarioConfig, out: Path, seed, say) -> int:
    ps = config.build_problem()
    opts = config.solve_options(seed)
    result = multi_start(ps, config.n_starts, opts)

    cluster_of = {}
    for k, cluster in enumerate(result.clusters):
        for member in cluster.members:
            cluster_of[member] = k

    rows = []
    for idx, report in enumerate(result.reports):
        cls = classify_cone(ps, report.solution) if report.converged else None
        rows.append(_report_row(config, idx, report, cls, cluster=cluster_of.get(idx, "")))
    _write_csv(out / "report.csv", _REPORT_HEADER, rows)

    cluster_rows = []
    for k, cluster in enumerate(result.clusters):
        rep = result.representative_report(cluster)
        cls = classify_cone(ps, rep.solution)
        cluster_rows.append(
            [
                k,
                len(cluster.members),
                cluster.representative,
                rep.energy.total,
                rep.residual,
                *_classification_columns(cls),
            ]
        )
        _write_solution(out / f"solution_c{k}.csv", rep.solution)
    _write_csv(
        out / "clusters.csv",
        [
            "cluster",
            "size",
            "representative_start",
            "energy_total",
            "residual",
            "classification",
            "positivity_margin",
            "normal_derivative_margin",
            "n_dead_core_regions",
            "dead_core_region_sizes",
        ],
        cluster_rows,
    )
    if result.clusters:
        best = result.representative_report(result.clusters[0])
        _write_solution(out / "solution.csv", best.solution)

    midpoint_rows = []
    for i in range(len(result.clusters)):
        for j in range(i + 1, len(result.clusters)):
            u = result.representative_report(result.clusters[i]).solution
            v = result.representative_report(result.clusters[j]).solution
            if np.any(u.values < 0) or np.any(v.values < 0):
                continue
            test = midpoint_energy_test(ps, u, v, config.path_q)
            midpoint_rows.append([i, j, test.verdict, test.gap])
    if midpoint_rows:
        _write_csv(
            out / "midpoint.csv", ["cluster_u", "cluster_v", "verdict", "gap"], midpoint_rows
        )

    statuses = ", ".join(result.statuses)
    say(
        f"{config.scenario_id}: {config.n_starts} starts, {result.n_clusters} cluster(s), "
        f"statuses: {statuses}"
    )
    for k, cluster in enumerate(result.clusters):
        rep = result.representative_report(cluster)
        cls = classify_cone(ps, rep.solution)
        say(
            f"  cluster {k}: {len(cluster.members)} member(s), energy "
            f"{rep.energy.total:.6g}, {cls.kind}"
        )
    say(
        "note: descent reaches minimizers and other stationary points it can "
        "descend into; saddle points are outside its reach"
    )
    if STATUS_NOT_BOUNDED_BELOW in result.statuses:
        return 0
    if not result.clusters:
        return 3
    return 0


def _cmd_path(config: ScenarioConfig, out: Path, u_source, v_source, say) -> int:
    ps = config.build_problem()
    u = _load_field(u_source, ps)
    v = _load_field(v_source, ps)
    diag = path_energy_profile(ps, u, v, config.path_q, config.path_samples)
    rows = []
    n = len(diag.t_samples)
    for k in range(n):
        d2_d = diag.second_difference_D[k - 1] if 1 <= k <= n - 2 else ""
        d2_i = diag.second_difference_I[k - 1] if 1 <= k <= n - 2 else ""
        rows.append([diag.t_samples[k], diag.diffusion_energy[k], diag.total_energy[k], d2_d, d2_i])
    _write_csv(
        out / "path.csv",
        ["t", "diffusion_energy", "total_energy", "second_diff_D", "second_diff_I"],
        rows,
    )
    witness = diag.strict_convexity_witness
    _write_csv(
        out / "path_summary.csv",
        [
            "min_second_difference_D",
            "min_second_difference_I",
            "pointwise_max_violation",
            "strictly_convex_D",
            "degenerate_constants",
            "witness_t",
        ],
        [
            [
                diag.min_second_difference_D,
                diag.min_second_difference_I,
                diag.pointwise_max_violation,
                int(diag.strictly_convex_diffusion),
                int(diag.degenerate_constant_pair),
                "" if witness is None else ";".join(_fmt(t) for t in witness),
            ]
        ],
    )
    mid = midpoint_energy_test(ps, u, v, config.path_q)
    flags = []
    if diag.degenerate_constant_pair:
        flags.append("degenerate (constants)")
    if not diag.strictly_convex_diffusion:
        flags.append("diffusion energy not strictly convex along the path")
    say(
        f"{config.scenario_id}: path over {n} samples, min second differences "
        f"D {diag.min_second_difference_D:.3g} / I {diag.min_second_difference_I:.3g}, "
        f"midpoint verdict {mid.verdict}"
    )
    for flag in flags:
        say(f"  flag: {flag}")
    return 0


def _cmd_eigen(config: ScenarioConfig, out: Path, seed, say) -> int:
    grid = config.build_grid()
    opts = config.solve_options(seed)
    report = first_eigenvalue(grid, config.eigen_p, opts)
    _write_csv(
        out / "eigen.csv",
        ["lambda1", "p", "iterations", "converged", "residual"],
        [[report.lambda1, config.eigen_p, report.iterations, int(report.converged), report.residual]],
    )
    _write_csv(
        out / "eigen_history.csv",
        ["iteration", "rayleigh"],
        [[k, value] for k, value in enumerate(report.rayleigh_history)],
    )
    _write_solution(out / "solution.csv", report.eigenfunction)
    say(
        f"{config.scenario_id}: first eigenvalue {report.lambda1:.8g} "
        f"({'converged' if report.converged else 'not converged'} in "
        f"{report.iterations} iterations)"
    )
    return 0 if report.converged else 3


def _cmd_audit(config: ScenarioConfig, out: Path, say) -> int:
    ps = config.build_problem()
    q_test = ps.reaction.natural_subhomogeneity_exponent
    cap = ps.diffusion.r if ps.diffusion.family == "power_shift" else ps.diffusion.p
    lines = []

    def record(name: str, result) -> None:
        lines.append(f"{'PASS' if result.passed else 'FAIL'}  {name}: {result.detail}")

    record("diffusion weight nonnegative and nondecreasing", audit_diffusion(ps.diffusion))
    record(
        f"reaction ratio nonincreasing at exponent {q_test:g}",
        audit_subhomogeneity(ps.reaction, q_test, grid=ps.grid),
    )
    record(
        f"growth bound (dimension {ps.grid.dimension}, cap {cap:g})",
        audit_growth(ps.reaction, ps.grid.dimension, cap, grid=ps.grid),
    )
    record(
        f"reaction pullback concave at exponent {q_test:g}",
        reaction_pullback_concavity(
            ps.reaction, q_test, np.geomspace(1e-6, 1e3, 64), grid=ps.grid
        ),
    )
    if ps.reaction.family == "pure_subhomogeneous" and ps.boundary == "natural":
        integral = neumann_integral_condition(ps)
        verdict = (
            "strongly positive critical points excluded, energy unbounded over constants"
            if integral > 0
            else "compatible with strongly positive critical points"
        )
        lines.append(f"INFO  coefficient integral = {integral:.17g}: {verdict}")

    text = "\n".join(lines) + "\n"
    (out / "audit.txt").write_text(text, encoding="utf-8")
    for line in lines:
        say(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plaplab",
        description=(
            "Energy minimization laboratory for generalized p-Laplacian "
            "problems with subhomogeneous reactions"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="config file path or builtin id (E1..E7)")
        p.add_argument("--out", default="plaplab_out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_solve = sub.add_parser("solve", help="single minimization run")
    common(p_solve)
    p_solve.add_argument(
        "--reference", default=None, help="solution.csv to compare against (comparability delta)"
    )

    p_exp = sub.add_parser("experiment", help="multi-start run with clustering")
    common(p_exp)

    p_path = sub.add_parser("path", help="energy profile along the power path between two fields")
    common(p_path)
    p_path.add_argument("--u", required=True, help="endpoint: solution.csv path or const:<value>")
    p_path.add_argument("--v", required=True, help="endpoint: solution.csv path or const:<value>")

    p_eigen = sub.add_parser("eigen", help="first eigenvalue on the config grid")
    common(p_eigen)

    p_audit = sub.add_parser("audit", help="run structural assumption audits")
    common(p_audit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    def say(message: str) -> None:
        if not args.quiet:
            print(message)

    try:
        config = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "solve":
            return _cmd_solve(config, out, args.seed, args.reference, say)
        if args.command == "experiment":
            return _cmd_experiment(config, out, args.seed, say)
        if args.command == "path":
            return _cmd_path(config, out, args.u, args.v, say)
        if args.command == "eigen":
            return _cmd_eigen(config, out, args.seed, say)
        return _cmd_audit(config, out, say)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4
    except PlapLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
