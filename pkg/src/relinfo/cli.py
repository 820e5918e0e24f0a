"""Command-line front end.

    relinfo simulate --model FILE --dynamics {replicator,master,rate} ...
    relinfo analyze {game,steady-states,complex-balance,energies} ...

Exit codes: 0 success / holds / balanced, 1 fails / unbalanced or a failed
run, 2 usage or parse error, 3 a channel named with ``--monotone``
increased beyond the slack, 4 inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import evogame, markov, reactnet
from .errors import IntegrationError, ParseError, RelInfoError
from .infodiv import ProbDist, Population, relative_info_array
from .numcore import IntegratorConfig, Trajectory, integrate, worst_increase

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_MONOTONE, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
DEFAULT_SLACK = 1e-6
KINDS = {".mat": "game", ".mk": "markov", ".rn": "network"}


class UsageError(Exception):
    pass


def _csv_floats(text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.split(",")], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _fmt(x: float) -> str:
    x = float(x)
    if np.isposinf(x):
        return "inf"
    if np.isneginf(x):
        return "-inf"
    return repr(x)


def _jsonable(x: float):
    x = float(x)
    return _fmt(x) if not np.isfinite(x) else x


def load_model(path: str, kind: str | None = None):
    p = Path(path)
    kind = kind or KINDS.get(p.suffix)
    if kind is None:
        raise UsageError(f"cannot infer model kind from {p.suffix!r}; pass --kind")
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    text = data.decode("utf-8")
    parser = {"game": evogame.parse_game_matrix, "markov": markov.parse_markov,
              "network": reactnet.parse_network}[kind]
    return kind, parser(text), hashlib.sha256(data).hexdigest()


def _as_markov(kind, model):
    if kind == "markov":
        return model
    if kind == "network":
        return reactnet.to_markov(model)
    raise UsageError("master dynamics need a Markov process (.mk) or single-species network")


def _probdist(vec, what):
    try:
        return ProbDist(vec).weights
    except RelInfoError as exc:
        raise UsageError(f"{what}: {exc}") from None


# --------------------------------------------------------------------------
# simulate


def _build_run(args, kind, model):
    monitors = {}
    x0 = args.initial
    ref = args.ref
    if args.dynamics == "replicator":
        if kind != "game":
            raise UsageError("replicator dynamics need a game matrix (.mat)")
        n = model.n
        names = [f"p{i + 1}" for i in range(n)]
        fieldfn = evogame.replicator_field(model)
    elif args.dynamics == "master":
        M = _as_markov(kind, model)
        n, names = M.n, list(M.states)
        fieldfn = markov.master_field(markov.hamiltonian(M))
    else:
        if kind != "network":
            raise UsageError("rate dynamics need a reaction network (.rn)")
        n, names = model.k, list(model.species)
        fieldfn = reactnet.rate_field(model)

    if x0.size != n:
        raise UsageError(f"--initial has {x0.size} entries, model has {n}")
    if ref is not None and ref.size != n:
        raise UsageError(f"--ref has {ref.size} entries, model has {n}")

    if args.dynamics in ("replicator", "master"):
        x0 = _probdist(x0, "--initial")
        if ref is not None:
            ref = _probdist(ref, "--ref")
    else:
        try:
            x0 = Population(x0).counts
            if ref is not None:
                ref = Population(ref).counts
        except RelInfoError as exc:
            raise UsageError(str(exc)) from None

    if ref is not None:
        r = ref.copy()
        monitors["I(ref,state)"] = lambda x, r=r: relative_info_array(r, x)
        monitors["I(state,ref)"] = lambda x, r=r: relative_info_array(x, r)

    if args.dynamics == "master" and args.beta is not None:
        M = _as_markov(kind, model)
        if ref is not None:
            q = ref
        else:
            states = markov.steady_states(M)
            if len(states) != 1:
                raise UsageError("free energy needs --ref when the steady state is not unique")
            q = states[0].weights
        try:
            energy = markov.energies_from_steady_state(q, args.beta, names=names)
        except RelInfoError as exc:
            raise UsageError(str(exc)) from None
        monitors["F(state)"] = markov.free_energy_monitor(energy)

    if args.dynamics == "rate":
        for c in reactnet.conservation_laws(model):
            label = "cons:" + reactnet.format_conservation_law(c, names)
            monitors[label] = lambda x, c=c: float(c @ x)

    return fieldfn, x0, names, monitors


def _summaries(traj: Trajectory, slack: float) -> dict:
    out = {}
    for name, values in traj.channels.items():
        inc = worst_increase(values)
        out[name] = {
            "min": _jsonable(np.min(values)),
            "max": _jsonable(np.max(values)),
            "final": _jsonable(values[-1]),
            "worst_increase": _jsonable(inc),
            "slack": slack,
            "verdict": "nonincreasing" if inc <= slack else "increased",
        }
    return out


def write_trajectory_csv(traj: Trajectory, names, stream):
    """Header ``t,<names>,<channels>``; channel names holding commas are quoted."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["t", *names, *traj.channels])
    chans = list(traj.channels.values())
    for i, t in enumerate(traj.times):
        writer.writerow([_fmt(t), *(_fmt(v) for v in traj.states[i]), *(_fmt(ch[i]) for ch in chans)])


def trajectory_json(traj: Trajectory, names) -> dict:
    return {
        "t": [_jsonable(t) for t in traj.times],
        "state_names": list(names),
        "states": [[_jsonable(v) for v in row] for row in traj.states],
        "channels": [
            {"name": name, "values": [_jsonable(v) for v in values]}
            for name, values in traj.channels.items()
        ],
    }


def cmd_simulate(args) -> int:
    kind, model, digest = load_model(args.model, args.kind)
    fieldfn, x0, names, monitors = _build_run(args, kind, model)
    if args.method == "rk4" and args.step is None:
        raise UsageError("--method rk4 needs --step")
    config = IntegratorConfig(
        method=args.method,
        step=args.step if args.step is not None else 1e-2,
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        max_steps=args.max_steps,
        state_floor=args.state_floor,
        max_step=args.max_step,
    )
    unknown = [m for m in args.monotone if m not in monitors]
    if unknown:
        raise UsageError(f"--monotone names unknown channel(s): {', '.join(unknown)}; "
                         f"available: {', '.join(monitors) or 'none'}")
    traj = integrate(fieldfn, x0, args.t_end, config, monitors)

    summaries = _summaries(traj, args.slack)
    broken = [m for m in args.monotone if summaries[m]["verdict"] != "nonincreasing"]
    status = EXIT_MONOTONE if broken else EXIT_OK

    if args.format == "csv":
        text_out = io.StringIO()
        write_trajectory_csv(traj, names, text_out)
        payload = text_out.getvalue()
    else:
        payload = json.dumps(trajectory_json(traj, names), indent=1) + "\n"
    _emit(payload, args.out)

    report = {
        "model": {"path": args.model, "kind": kind, "sha256": digest},
        "command": args.argv,
        "integrator": {
            "method": config.method, "step": config.step, "rel_tol": config.rel_tol,
            "abs_tol": config.abs_tol, "max_steps": config.max_steps,
            "state_floor": config.state_floor, "max_step": config.max_step,
            "steps": traj.n_steps, "rejected": traj.n_rejected,
            "clamp_events": traj.clamp_events,
        },
        "t_end": args.t_end,
        "seed": args.seed,
        "channels": summaries,
        "monotone_requested": list(args.monotone),
        "monotone_violations": broken,
        "exit_status": status,
    }
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    else:
        for name, s in summaries.items():
            print(f"{name}: final={s['final']} worst_increase={s['worst_increase']} "
                  f"{s['verdict']}", file=sys.stderr)
    return status


def _emit(payload: str, out: str | None):
    if out:
        Path(out).write_text(payload)
    else:
        sys.stdout.write(payload)


# --------------------------------------------------------------------------
# analyze

_CHECKS = {
    "nash": lambda q, A, a: evogame.is_symmetric_nash(q, A, a.tol),
    "dominant": lambda q, A, a: evogame.is_dominant(q, A, a.tol, a.samples, a.seed),
    "ess": lambda q, A, a: evogame.is_ess(q, A, a.tol, a.samples, a.seed),
    "thomas": lambda q, A, a: evogame.is_thomas_ess(q, A, a.tol, a.samples, a.seed),
}


def _render(args, result: dict, lines: list[str]):
    if args.format == "json":
        _emit(json.dumps(result, indent=1, sort_keys=True) + "\n", args.out)
    else:
        _emit("\n".join(lines) + "\n", args.out)


def cmd_analyze_game(args) -> int:
    kind, A, _ = load_model(args.matrix, args.kind or "game")
    if kind != "game":
        raise UsageError("--matrix must be a game matrix")
    q = _probdist(args.strategy, "--strategy")
    if q.size != A.n:
        raise UsageError(f"--strategy has {q.size} entries, matrix is {A.n}x{A.n}")
    verdict = _CHECKS[args.check](q, A, args)
    result = {"check": args.check, "strategy": [float(v) for v in q], **verdict.to_dict()}
    lines = [f"check: {args.check}", f"status: {verdict.status}", f"margin: {_fmt(verdict.margin)}"]
    if verdict.witness is not None:
        lines.append("witness: " + ",".join(_fmt(v) for v in verdict.witness))
    if verdict.detail:
        lines.append(f"detail: {verdict.detail}")
    _render(args, result, lines)
    return {evogame.Status.HOLDS: EXIT_OK, evogame.Status.FAILS: EXIT_FAIL,
            evogame.Status.INCONCLUSIVE: EXIT_INCONCLUSIVE}[verdict.status]


def cmd_analyze_steady(args) -> int:
    kind, model, _ = load_model(args.model, args.kind)
    M = _as_markov(kind, model)
    H = markov.hamiltonian(M)
    states = markov.steady_states(M, args.tol)
    result = {"states": list(M.states), "steady_states": []}
    lines = [f"{len(states)} steady state(s) over states {' '.join(M.states)}"]
    for q in states:
        resid = float(np.max(np.abs(H @ q.weights), initial=0.0))
        result["steady_states"].append({"distribution": [float(v) for v in q], "residual": resid})
        lines.append(",".join(_fmt(v) for v in q) + f"  residual={resid:.3e}")
    _render(args, result, lines)
    return EXIT_OK


def cmd_analyze_balance(args) -> int:
    kind, N, _ = load_model(args.model, args.kind)
    if kind != "network":
        raise UsageError("complex-balance needs a reaction network (.rn)")
    if args.point.size != N.k:
        raise UsageError(f"--point has {args.point.size} entries, network has {N.k} species")
    report = reactnet.is_complex_balanced(N, args.point, args.tol)
    labels = [N.complex_label(i) for i in range(len(N.complexes))]
    lines = [f"balanced: {str(report.balanced).lower()}"]
    lines += [f"  {lab}: residual={_fmt(r)}" for lab, r in zip(labels, report.residuals)]
    _render(args, report.to_dict(labels), lines)
    return EXIT_OK if report.balanced else EXIT_FAIL


def cmd_analyze_energies(args) -> int:
    kind, model, _ = load_model(args.model, args.kind)
    M = _as_markov(kind, model)
    states = markov.steady_states(M)
    if len(states) != 1:
        raise UsageError(f"process has {len(states)} steady states; energies need a unique one")
    ground = None
    if args.ground is not None:
        if args.ground not in M.states:
            raise UsageError(f"unknown state {args.ground!r}")
        ground = M.states.index(args.ground)
    energy = markov.energies_from_steady_state(states[0], args.beta, ground, names=M.states)
    result = {
        "beta": energy.beta,
        "temperature": energy.temperature,
        "partition": energy.partition,
        "energies": dict(zip(M.states, (float(e) for e in energy.energies))),
        "steady_state": dict(zip(M.states, (float(v) for v in states[0]))),
    }
    lines = [f"beta: {_fmt(energy.beta)}", f"Z: {_fmt(energy.partition)}", "state energy probability"]
    lines += [f"{s} {_fmt(e)} {_fmt(p)}" for s, e, p in zip(M.states, energy.energies, states[0])]
    _render(args, result, lines)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relinfo", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate dynamics and monitor channels")
    sim.add_argument("--model", required=True)
    sim.add_argument("--kind", choices=sorted(set(KINDS.values())))
    sim.add_argument("--dynamics", required=True, choices=["replicator", "master", "rate"])
    sim.add_argument("--initial", required=True, type=_csv_floats)
    sim.add_argument("--t-end", required=True, type=float)
    sim.add_argument("--method", default="rk45", choices=["rk4", "rk45"])
    sim.add_argument("--step", type=float)
    sim.add_argument("--rel-tol", type=float, default=1e-8)
    sim.add_argument("--abs-tol", type=float, default=1e-10)
    sim.add_argument("--max-steps", type=int, default=1_000_000)
    sim.add_argument("--max-step", type=float)
    sim.add_argument("--state-floor", type=float, default=0.0)
    sim.add_argument("--ref", type=_csv_floats)
    sim.add_argument("--beta", type=float)
    sim.add_argument("--monotone", action="append", default=[], metavar="CHANNEL",
                     help="exit 3 if this channel increases by more than --slack")
    sim.add_argument("--slack", type=float, default=DEFAULT_SLACK)
    sim.add_argument("--out")
    sim.add_argument("--report")
    sim.add_argument("--format", default="csv", choices=["csv", "json"])
    sim.add_argument("--seed", type=int, default=0)
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="equilibrium and balance checks")
    asub = ana.add_subparsers(dest="analysis", required=True)

    def common(p):
        p.add_argument("--kind", choices=sorted(set(KINDS.values())))
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--samples", type=int, default=evogame.DEFAULT_SAMPLES)
        p.add_argument("--seed", type=int, default=evogame.DEFAULT_SEED)
        p.add_argument("--format", default="text", choices=["text", "json"])
        p.add_argument("--out")

    game = asub.add_parser("game")
    game.add_argument("--matrix", required=True)
    game.add_argument("--strategy", required=True, type=_csv_floats)
    game.add_argument("--check", required=True, choices=sorted(_CHECKS))
    common(game)
    game.set_defaults(func=cmd_analyze_game)

    steady = asub.add_parser("steady-states")
    steady.add_argument("--model", required=True)
    common(steady)
    steady.set_defaults(func=cmd_analyze_steady, tol=1e-10)

    bal = asub.add_parser("complex-balance")
    bal.add_argument("--model", required=True)
    bal.add_argument("--point", required=True, type=_csv_floats)
    common(bal)
    bal.set_defaults(func=cmd_analyze_balance)

    en = asub.add_parser("energies")
    en.add_argument("--model", required=True)
    en.add_argument("--beta", type=float, default=1.0)
    en.add_argument("--ground")
    common(en)
    en.set_defaults(func=cmd_analyze_energies)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"relinfo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationError as exc:
        print(f"relinfo: integration failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except RelInfoError as exc:
        print(f"relinfo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
