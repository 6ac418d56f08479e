"""Command-line pipeline, registered on ``flask``.

Every command reads a ``RunConfig`` (JSON file, then CLI flags), writes a
self-describing JSON or CSV result (config digest embedded) and, with
``--record``, stores the run. Validation failures exit with 2, numerical
contract failures with 3.
"""
from __future__ import annotations

import contextvars
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np
from flask import current_app

from .engine.agp import alpha_closed, alpha_closed_for, alpha_profile, closed_kind, default_grid
from .engine.expand import BCH_WORDS
from .engine.fermions import QAOA, fermion_evolve
from .engine.matching import (
    AngleSet,
    MatchReport,
    angle_budget,
    conjectured_ring_ratio,
    derive_angles,
    fit_power_law,
    reverse_protocol,
)
from .engine.model import ISING_RING, ProblemInstance, instance_from_spec
from .engine.oracles import SUITES, run_oracles
from .engine.pauli import set_prune_threshold
from .engine.schedule import Schedule
from .engine.sim import approximation_ratio, bloch_trajectory, cd_evolve, optimize_angles, qaoa_state, scan_p1
from .errors import OracleFailure, ValidationError
from .extensions import db
from .models import ProblemRecord, RunRecord
from .runconfig import (
    RunConfig,
    dump_csv,
    dump_json,
    load_angles,
    parse_float_list,
    parse_instance,
    parse_schedule,
    read_json,
    resolve_output,
    sibling_path,
    write_text,
)
from .utils.decorators import cli_errors

ALPHA_TOLERANCE = 1e-8
METHODS = ("qaoa", "cd", "adiabatic", "compare", "fermion", "scan")

_OPTIONS = {
    "instance": click.option(
        "--instance", default=None,
        help="Instance JSON file or shorthand: two_level, single_spin, ring:N, path:N, regular:D:N[:SEED]."),
    "schedule": click.option(
        "--schedule", default=None,
        help="Schedule JSON file or shorthand: linear, smoothstep, sin_squared, power_law:R, sine:S0 (optionally @T)."),
    "p": click.option("--p", "p", default=None, help="Circuit depth, or comma-separated depths."),
    "orders": click.option("--orders", default=None, help="BCH,MAGNUS truncation orders, e.g. 4,3."),
    "seed": click.option("--seed", type=int, default=None, help="Seed for random instances."),
    "out": click.option("--out", default=None, help="Output file; stdout when omitted."),
    "config": click.option("--config", "config_path", default=None,
                           type=click.Path(exists=True, dir_okay=False), help="JSON run configuration."),
    "record": click.option("--record", is_flag=True, help="Store the run in the database."),
}


def _options(*names):
    def decorator(fn):
        for name in reversed(names):
            fn = _OPTIONS[name](fn)
        return fn

    return decorator


def _config(command: str, config_path: str | None, **flags) -> RunConfig:
    config = RunConfig.build(command, config_path, current_app.config, **flags)
    set_prune_threshold(config.numeric("prune_threshold"))
    current_app.logger.debug("%s config digest %s", command, config.digest)
    return config


def _instance(config: RunConfig) -> ProblemInstance:
    if not config.instance:
        raise ValidationError("an instance is required (--instance)")
    return instance_from_spec(config.instance)


def _schedule(config: RunConfig, total_time: float | None = None) -> Schedule:
    payload = dict(config.schedule or parse_schedule(None))
    return Schedule.from_dict(payload, total_time=total_time)


def _stamp(report: MatchReport, config: RunConfig) -> MatchReport:
    """Carry the run's seed and config digest on a match report."""
    report.seed = config.seed
    report.config_digest = config.digest
    return report


def _single_p(config: RunConfig) -> int:
    if len(config.p) != 1:
        raise ValidationError("exactly one depth is required (--p)", p=config.p)
    return config.p[0]


def _cap(config: RunConfig) -> int:
    return int(config.numeric("statevector_qubit_cap"))


def _uses_fermions(inst: ProblemInstance, config: RunConfig) -> bool:
    return inst.kind == ISING_RING and inst.n_qubits > _cap(config)


def qaoa_ratio(inst: ProblemInstance, angles: AngleSet, config: RunConfig) -> float:
    """Ratio of a QAOA circuit; large rings go through the free-fermion modes."""
    if _uses_fermions(inst, config):
        return approximation_ratio(inst, fermion_evolve(inst.n_qubits, angles=angles, mode=QAOA))
    return approximation_ratio(inst, qaoa_state(inst, angles, _cap(config)))


def continuous_ratio(inst: ProblemInstance, sched: Schedule, config: RunConfig,
                     include_cd: bool = True, include_s: bool = True) -> float:
    steps = int(config.numeric("rk4_steps"))
    if _uses_fermions(inst, config):
        modes = fermion_evolve(inst.n_qubits, schedule=sched, include_cd=include_cd, include_s=include_s, steps=steps)
        return approximation_ratio(inst, modes)
    state = cd_evolve(inst, sched, include_cd=include_cd, include_s=include_s, steps=steps, cap=_cap(config))
    return approximation_ratio(inst, state)


def fermion_ratio(inst: ProblemInstance, config: RunConfig, angles: AngleSet | None = None,
                  sched: Schedule | None = None) -> float:
    if inst.kind != ISING_RING:
        raise ValidationError("the fermion method needs a ring instance", instance=inst.label)
    if angles is not None:
        modes = fermion_evolve(inst.n_qubits, angles=angles, mode=QAOA)
    else:
        modes = fermion_evolve(inst.n_qubits, schedule=sched, steps=int(config.numeric("rk4_steps")))
    return approximation_ratio(inst, modes)


def _emit(config: RunConfig, payload: dict, table: tuple[list, list] | None = None) -> None:
    """Write the JSON payload (and a CSV table next to it) or print to stdout."""
    document = {"command": config.command, "config_digest": config.digest, "config": config.to_dict(), **payload}
    path = resolve_output(config.out, current_app.config.get("RESULTS_DIR"))
    if path is None:
        click.echo(dump_json(document))
        return
    if path.endswith(".csv") and table is not None:
        write_text(path, dump_csv(*table, digest=config.digest))
        write_text(sibling_path(path, ".json"), dump_json(document))
    else:
        write_text(path, dump_json(document))
        if table is not None:
            write_text(sibling_path(path, ".csv"), dump_csv(*table, digest=config.digest))
    current_app.logger.info("%s wrote %s", config.command, path)


def _record(config: RunConfig, inst: ProblemInstance | None, result: dict, **fields) -> RunRecord:
    problem = ProblemRecord.get_or_create(inst) if inst is not None else None
    run = RunRecord.from_result(config, result, problem=problem, **fields)
    db.session.add(run)
    db.session.commit()
    current_app.logger.info("recorded %s run %d", config.command, run.id)
    click.echo(f"recorded run {run.id}", err=True)
    return run


def _stored_schedule(reference: str) -> dict:
    """Schedule payload from a JSON file or ``run:ID``."""
    if reference.startswith("run:"):
        try:
            run_id = int(reference[4:])
        except ValueError:
            raise ValidationError(f"bad run reference {reference!r}") from None
        run = db.session.get(RunRecord, run_id)
        if run is None:
            raise ValidationError(f"run {run_id} does not exist")
        result = run.to_dict(include_result=True)["result"]
        payload = result.get("schedule") or (result.get("report") or {}).get("schedule")
        if not payload:
            raise ValidationError(f"run {run_id} holds no schedule", command=run.command)
        return payload
    data = read_json(reference)
    if "schedule" not in data and isinstance(data.get("report"), dict):
        data = data["report"]
    return parse_schedule(data)


def register_cli_commands(app):
    @app.cli.command("alpha")
    @_options("instance", "seed", "out", "config", "record")
    @click.option("--points", type=int, default=11, show_default=True, help="Grid points on [0, 1].")
    @cli_errors
    def alpha_command(instance, seed, out, config_path, record, points):
        """Tabulate the gauge-potential coefficient alpha(lambda)."""
        if points < 2:
            raise ValidationError("need at least two grid points", points=points)
        config = _config("alpha", config_path, instance=instance, seed=seed, out=out, points=points)
        inst = _instance(config)
        grid = default_grid(points)
        numeric = alpha_profile(inst, grid).values

        family = closed_kind(inst)
        closed = printed = None
        if family is not None:
            kind, nu = family
            closed = np.asarray(alpha_closed(kind, grid, nu=nu, printed=False))
            printed = np.asarray(alpha_closed_for(inst, grid, printed=True))

        rows = []
        for i, lam in enumerate(grid):
            row = [float(lam), float(numeric[i]), None, None, None]
            if closed is not None:
                row[2:] = [float(closed[i]), float(printed[i]), float(printed[i] / numeric[i])]
            rows.append(row)
        header = ["lambda", "alpha_numeric", "alpha_closed", "alpha_printed", "printed_ratio"]

        difference = None
        comparable = closed is not None and not (family[0] == "regular" and inst.has_triangles)
        if comparable:
            difference = float(np.max(np.abs(numeric - closed)))
        payload = {"instance": inst.to_spec(), "family": family[0] if family else None,
                   "max_difference": difference, "rows": rows}
        path = resolve_output(config.out, current_app.config.get("RESULTS_DIR"))
        if path is None:
            click.echo(dump_csv(header, rows, digest=config.digest), nl=False)
        else:
            _emit(config, payload, (header, rows))
        if record:
            _record(config, inst, payload, method="numeric")
        if comparable and difference > ALPHA_TOLERANCE:
            raise OracleFailure("numeric and closed-form alpha disagree", max_difference=difference)

    @app.cli.command("derive")
    @_options("instance", "schedule", "p", "orders", "seed", "out", "config", "record")
    @click.option("--from-schedule", "from_schedule", default=None,
                  help="Re-derive a stored schedule: JSON file or run:ID.")
    @click.option("--simulate/--no-simulate", default=False, help="Append the statevector ratio.")
    @click.option("--no-cd", "no_cd", is_flag=True, help="Match against the protocol without the gauge term.")
    @cli_errors
    def derive_command(instance, schedule, p, orders, seed, out, config_path, record, from_schedule, simulate, no_cd):
        """Derive QAOA angles that mimic a counterdiabatic protocol."""
        if from_schedule:
            schedule = _stored_schedule(from_schedule)
        config = _config("derive", config_path, instance=instance, schedule=schedule, p=p, orders=orders,
                         seed=seed, out=out, simulate=simulate, include_cd=not no_cd)
        inst = _instance(config)
        shape = _schedule(config)
        if not config.p:
            raise ValidationError("a depth is required (--p)")
        optimizer = config.optimizer_config()

        reports, table = [], []
        for depth in config.p:
            report = derive_angles(inst, shape, depth, config.orders, optimizer, include_cd=not no_cd)
            entry = _stamp(report, config).to_dict()
            ratio = qaoa_ratio(inst, report.angles, config) if simulate else None
            entry["ratio"] = ratio
            reports.append(entry)
            table.append([depth, report.equivalent_T, report.total_error, ratio])

        if len(reports) == 1:
            report_dict = reports[0]
            angle_table = (["q", "gamma", "beta", "tau", "error"], AngleSet.from_dict(report_dict["angles"]).csv_rows())
            _emit(config, {"instance": inst.to_spec(), "report": report_dict}, angle_table)
        else:
            _emit(config, {"instance": inst.to_spec(), "reports": reports}, (["p", "T", "total_error", "ratio"], table))
        if record:
            for entry in reports:
                _record(config, inst, {"report": entry, "schedule": entry["schedule"]}, method="forward",
                        p=entry["angles"]["p"], total_time=entry["T"], ratio=entry["ratio"],
                        total_error=entry["total_error"])

    @app.cli.command("reverse")
    @_options("instance", "orders", "seed", "out", "config", "record")
    @click.option("--angles", "angles_path", required=True, type=click.Path(exists=True, dir_okay=False),
                  help="Angle set: JSON (angles or match report) or CSV with gamma, beta columns.")
    @click.option("--no-cd", "no_cd", is_flag=True, help="Fit the protocol without the gauge term.")
    @cli_errors
    def reverse_command(instance, orders, seed, out, config_path, record, angles_path, no_cd):
        """Fit the continuous protocol that a QAOA angle set approximates."""
        angles = load_angles(angles_path)
        config = _config("reverse", config_path, instance=instance, orders=orders, seed=seed, out=out,
                         angles=angles.to_dict(), include_cd=not no_cd)
        inst = _instance(config)
        report = reverse_protocol(inst, angles, config.orders, include_cd=not no_cd,
                                  smoothness_threshold=float(config.numeric("smoothness_threshold")))
        report_dict = _stamp(report, config).to_dict()
        _emit(config, {"instance": inst.to_spec(), "report": report_dict, "schedule": report_dict["schedule"]})
        if record:
            _record(config, inst, {"report": report_dict, "schedule": report_dict["schedule"]}, method="reverse",
                    p=angles.p, total_time=report.equivalent_T, total_error=report.total_error)

    @app.cli.command("simulate")
    @_options("instance", "schedule", "p", "orders", "seed", "out", "config", "record")
    @click.option("--method", type=click.Choice(METHODS), default="qaoa", show_default=True)
    @click.option("--angles", "angles_path", default=None, type=click.Path(exists=True, dir_okay=False),
                  help="Angle set for the qaoa and fermion methods.")
    @click.option("--T", "total_times", default=None, help="Total time, or comma-separated times.")
    @click.option("--optimize", is_flag=True, help="Polish the angles by gradient ascent first.")
    @click.option("--bloch", is_flag=True, help="Emit the effective-spin Bloch trajectory (two-level only).")
    @click.option("--samples", type=int, default=25, show_default=True, help="Bloch samples per unitary.")
    @click.option("--grid", type=int, default=24, show_default=True, help="Grid points per axis for scan.")
    @cli_errors
    def simulate_command(instance, schedule, p, orders, seed, out, config_path, record,
                         method, angles_path, total_times, optimize, bloch, samples, grid):
        """Simulate QAOA circuits or continuous protocols and report ratios."""
        angles = load_angles(angles_path) if angles_path else None
        times = parse_float_list(total_times)
        config = _config("simulate", config_path, instance=instance, schedule=schedule, p=p, orders=orders,
                         seed=seed, out=out, method=method, T=times or None, optimize=optimize, bloch=bloch,
                         samples=samples if bloch else None, grid=grid if method == "scan" else None,
                         angles=angles.to_dict() if angles else None)
        inst = _instance(config)
        payload: dict = {"instance": inst.to_spec(), "method": method}
        table = None
        fields: dict = {"method": method}

        if method in ("qaoa", "fermion") and (angles is not None or config.p):
            if angles is None:
                report = derive_angles(inst, _schedule(config), _single_p(config), config.orders,
                                       config.optimizer_config())
                angles = report.angles.without_taus()
                payload["derived_from"] = _stamp(report, config).to_dict()
            if optimize:
                result = optimize_angles(inst, angles, cap=_cap(config))
                payload["optimization"] = {"iterations": result.iterations, "gradient_norm": result.gradient_norm,
                                           "initial_ratio": qaoa_ratio(inst, angles, config)}
                angles = result.angles
            if method == "fermion":
                ratio = fermion_ratio(inst, config, angles=angles)
            else:
                ratio = qaoa_ratio(inst, angles, config)
            payload.update({"angles": angles.to_dict(), "ratio": ratio, "angle_budget": angle_budget(angles)})
            fields.update(p=angles.p, ratio=ratio)
            if bloch:
                points = bloch_trajectory(inst, angles, samples)
                table = (["index", "x", "y", "z"], [[i, *pt] for i, pt in enumerate(points)])
                payload["bloch"] = [list(pt) for pt in points]
        elif method == "scan":
            result = scan_p1(inst, grid, cap=_cap(config))
            payload.update(result._asdict())
            fields.update(p=1, ratio=result.ratio)
        elif method in ("cd", "adiabatic", "compare", "fermion"):
            base = _schedule(config)
            rows = []
            for T in times or [base.total_time]:
                sched = base.with_total_time(T)
                row = {"T": T}
                if method == "fermion":
                    row["ratio_cd"] = fermion_ratio(inst, config, sched=sched)
                elif method in ("cd", "compare"):
                    row["ratio_cd"] = continuous_ratio(inst, sched, config)
                if method in ("adiabatic", "compare"):
                    row["ratio_adiabatic"] = continuous_ratio(inst, sched, config, include_cd=False, include_s=False)
                if method == "compare":
                    row["cd_dominates"] = row["ratio_cd"] >= row["ratio_adiabatic"] - 1e-6
                rows.append(row)
            payload.update({"schedule": base.to_dict(), "results": rows})
            columns = ["T", "ratio_cd", "ratio_adiabatic"]
            table = (columns, [[r.get(c) for c in columns] for r in rows])
            best = max((r.get("ratio_cd", r.get("ratio_adiabatic")) for r in rows))
            fields.update(total_time=rows[-1]["T"], ratio=best)
        else:
            raise ValidationError(f"method {method} needs --angles or --p")

        _emit(config, payload, table)
        if record:
            _record(config, inst, payload, **fields)

    @app.cli.command("oracle")
    @_options("out", "config")
    @click.option("--suite", "suites", multiple=True, type=click.Choice(SUITES), help="Suites to run; all by default.")
    @click.option("--qubits", type=int, default=4, show_default=True, help="Qubits for the dense trace checks.")
    @click.option("--fermion-sites", type=int, default=8, show_default=True)
    @click.option("--flip-word", "flip_words", multiple=True,
                  help="Negate a BCH word coefficient (fault injection), e.g. YXXY.")
    @cli_errors
    def oracle_command(out, config_path, suites, qubits, fermion_sites, flip_words):
        """Check the symbolic algebra and expansions against dense matrices."""
        known = {w for _, w, _ in BCH_WORDS}
        unknown = sorted(set(flip_words) - known)
        if unknown:
            raise ValidationError("unknown BCH words", words=unknown, known=sorted(known))
        words = [(d, w, -c if w in flip_words else c) for d, w, c in BCH_WORDS]
        config = _config("oracle", config_path, out=out, suites=list(suites) or list(SUITES), qubits=qubits,
                         fermion_sites=fermion_sites, flip_words=list(flip_words) or None)
        results = run_oracles(suites or SUITES, qubits=qubits, words=words, fermion_sites=fermion_sites,
                              cap=int(config.numeric("dense_qubit_cap")))
        failed = [f"{r.suite}/{r.name}" for r in results if not r.passed]
        _emit(config, {"passed": not failed, "results": [r.to_dict() for r in results]})
        for r in results:
            if not r.passed:
                click.echo(f"FAIL {r.suite}/{r.name}: {r.detail}", err=True)
        if failed:
            raise OracleFailure(f"{len(failed)} oracle checks failed", failed=failed)

    @app.cli.command("sweep")
    @_options("instance", "schedule", "p", "orders", "seed", "out", "config", "record")
    @click.option("--compare/--no-compare", default=False,
                  help="Also simulate the CD and adiabatic protocols at each matched T.")
    @click.option("--workers", type=int, default=None, help="Worker threads; SWEEP_WORKERS by default.")
    @cli_errors
    def sweep_command(instance, schedule, p, orders, seed, out, config_path, record, compare, workers):
        """Derive and simulate over a list of depths; fit the scaling exponents."""
        config = _config("sweep", config_path, instance=instance, schedule=schedule, p=p, orders=orders,
                         seed=seed, out=out, compare=compare)
        inst = _instance(config)
        shape = _schedule(config)
        if not config.p:
            raise ValidationError("a list of depths is required (--p)")
        optimizer = config.optimizer_config()
        workers = workers or int(current_app.config.get("SWEEP_WORKERS", 1))
        if workers < 1:
            raise ValidationError("workers must be positive", workers=workers)

        def run_one(depth: int) -> dict:
            report = derive_angles(inst, shape, depth, config.orders, optimizer)
            row = {
                "p": depth,
                "T": report.equivalent_T,
                "C": qaoa_ratio(inst, report.angles, config),
                "C_cd": None,
                "C_ad": None,
                "conjectured": conjectured_ring_ratio(depth),
                "total_error": report.total_error,
                "warnings": report.warnings,
            }
            if compare:
                sched = shape.with_total_time(report.equivalent_T)
                row["C_cd"] = continuous_ratio(inst, sched, config)
                row["C_ad"] = continuous_ratio(inst, sched, config, include_cd=False, include_s=False)
            return row

        depths = sorted(set(config.p))
        if workers == 1 or len(depths) == 1:
            rows = [run_one(d) for d in depths]
        else:
            # workers start from empty contexts; hand each one a copy of this run's
            contexts = [contextvars.copy_context() for _ in depths]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(lambda ctx, depth: ctx.run(run_one, depth), contexts, depths))
        rows.sort(key=lambda r: r["p"])

        fits = {}
        if len(rows) >= 2:
            fits["T_vs_p"] = dict(zip(("exponent", "prefactor"),
                                      fit_power_law([r["p"] for r in rows], [r["T"] for r in rows])))
            gaps = [1.0 - r["C"] for r in rows]
            if all(g > 0 for g in gaps):
                fits["gap_vs_p"] = dict(zip(("exponent", "prefactor"), fit_power_law([r["p"] for r in rows], gaps)))
        columns = ["p", "T", "C", "C_cd", "C_ad", "conjectured"]
        _emit(config, {"instance": inst.to_spec(), "schedule": shape.to_dict(), "rows": rows, "fits": fits},
              (columns, [[r[c] for c in columns] for r in rows]))
        current_app.logger.info("sweep over p=%s on %s: fits %s", depths, inst.label, fits)
        if record:
            for r in rows:
                _record(config, inst, r, method="forward", p=r["p"], total_time=r["T"], ratio=r["C"],
                        total_error=r["total_error"])

    @app.cli.command("transfer")
    @_options("instance", "schedule", "p", "orders", "seed", "out", "config", "record")
    @click.option("--target", required=True, help="Target instance (same forms as --instance).")
    @click.option("--target-p", "target_p", type=int, default=None, help="Depth on the target; source depth by default.")
    @click.option("--angles", "angles_path", default=None, type=click.Path(exists=True, dir_okay=False),
                  help="Source angles; derived from --schedule at --p when omitted.")
    @click.option("--optimize", is_flag=True, help="Optimize the source angles before reversing them.")
    @cli_errors
    def transfer_command(instance, schedule, p, orders, seed, out, config_path, record,
                         target, target_p, angles_path, optimize):
        """Reverse source angles into a schedule and re-derive angles on a target graph."""
        angles = load_angles(angles_path) if angles_path else None
        config = _config("transfer", config_path, instance=instance, schedule=schedule, p=p, orders=orders,
                         seed=seed, out=out, target=parse_instance(target, seed), target_p=target_p,
                         optimize=optimize, angles=angles.to_dict() if angles else None)
        source = _instance(config)
        target_inst = instance_from_spec(config.options["target"])

        if angles is None:
            angles = derive_angles(source, _schedule(config), _single_p(config), config.orders,
                                   config.optimizer_config()).angles.without_taus()
        if optimize:
            angles = optimize_angles(source, angles, cap=_cap(config)).angles
        source_ratio = qaoa_ratio(source, angles, config)

        reversed_report = reverse_protocol(source, angles, config.orders,
                                           smoothness_threshold=float(config.numeric("smoothness_threshold")))
        depth = target_p or angles.p
        forward = derive_angles(target_inst, reversed_report.schedule, depth, config.orders, config.optimizer_config())
        target_ratio = qaoa_ratio(target_inst, forward.angles, config)
        direct_ratio = qaoa_ratio(target_inst, angles, config) if depth == angles.p else None

        payload = {
            "source": {"instance": source.to_spec(), "angles": angles.to_dict(), "ratio": source_ratio},
            "schedule": reversed_report.schedule.to_dict(),
            "reverse": _stamp(reversed_report, config).to_dict(),
            "target": {"instance": target_inst.to_spec(), "report": _stamp(forward, config).to_dict(),
                       "ratio": target_ratio, "direct_ratio": direct_ratio},
        }
        _emit(config, payload)
        if record:
            _record(config, target_inst, payload, method="transfer", p=depth, total_time=forward.equivalent_T,
                    ratio=target_ratio, total_error=forward.total_error)
