"""Command-line driver.

Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 bad input or usage.
"""
from __future__ import annotations

import argparse
import json
import sys

from .io import (SpecError, connection_to_json, dumps, input_hash, lagrangian_to_json, linear_thickened_from_json,
                 linear_thickened_to_json, linear_to_spec, loads, parse_connection, parse_system, spec_of,
                 system_to_spec, thickened_from_json, thickened_to_json)
from .gnh import NotLinearQuadratic
from .pipeline import PipelineConfig, SimulationConfig, run_corpus, run_pipeline
from .report import Report


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _emit(args, payload, text: str | None = None):
    out = text if (args.format == "text" and text is not None) else (
        payload if isinstance(payload, str) else dumps(payload))
    if not out.endswith("\n"):
        out += "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _load_connection(args, chart):
    if not getattr(args, "connection", None):
        return None
    data = loads(_read(args.connection))
    if isinstance(data, dict) and "connection" in data and "forms" not in data:
        data = data["connection"]
    return parse_connection(data, chart)


def _load_any(path):
    """System spec, or a stage output carrying a "format" tag."""
    text = _read(path)
    data = loads(text)
    fmt = data.get("format") if isinstance(data, dict) else None
    if fmt == "thickened":
        return "thickened", thickened_from_json(data), text
    if fmt == "linear_thickened":
        return "linear_thickened", linear_thickened_from_json(data), text
    return "system", parse_system(data), text


def _report_json(*reports: Report) -> dict:
    return {"passed": all(r.passed for r in reports), "reports": [r.to_json() for r in reports]}


def _report_text(*reports: Report) -> str:
    return "\n".join(str(r) for r in reports)


# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    from .gnh import LinQuadSystem
    from .linear import validate_lq
    from .presys import validate

    _, sys_, _ = _load_any(args.spec)
    rep = validate_lq(sys_) if isinstance(sys_, LinQuadSystem) else validate(sys_)
    _emit(args, _report_json(rep), _report_text(rep))
    return 0 if rep.passed else 1


def _thicken(sys_, args):
    from .gnh import LinQuadSystem
    from .linear import coisotropy_check_lq, default_matrix_connection, nondegeneracy_check_lq, thicken_lq
    from .presys import default_connection, kernel_basis
    from .thicken import coisotropy_check, nondegeneracy_check, thicken

    rep = Report("thicken")
    if isinstance(sys_, LinQuadSystem):
        if getattr(args, "connection", None):
            raise UsageError("--connection applies to symbolic systems only")
        t = thicken_lq(sys_, default_matrix_connection(sys_))
        rep.add(coisotropy_check_lq(t))
        rep.checks += nondegeneracy_check_lq(t).checks
        return t, rep
    P = _load_connection(args, sys_.chart) or sys_.connection
    if P is None:
        P = default_connection(sys_.omega, kernel_basis(sys_.omega, sys_.kernel))
    t = thicken(sys_, P)
    rep.add(coisotropy_check(t))
    rep.checks += nondegeneracy_check(t).checks
    return t, rep


def _thick_json(t, rep=None):
    from .linear import LinearThickening

    data = linear_thickened_to_json(t) if isinstance(t, LinearThickening) else thickened_to_json(t)
    if rep is not None:
        data["report"] = rep.to_json()
    return data


def cmd_thicken(args) -> int:
    kind, obj, _ = _load_any(args.spec)
    if kind != "system":
        raise UsageError("thicken expects a system spec")
    t, rep = _thicken(obj, args)
    text = _report_text(rep) + "\n" + (f"omega_tilde = {t.omega_tilde}" if hasattr(t, "omega_tilde") else "")
    _emit(args, _thick_json(t, rep), text)
    return 0 if rep.passed else 1


def _lift_any(t):
    from .lift import hamiltonian_restriction_check, invariance_check, lift, recover_extended_hamiltonian
    from .linear import (LinearThickening, hamiltonian_restriction_check_lq, invariance_check_lq, lift_lq,
                         recover_hamiltonian_lq)

    if isinstance(t, LinearThickening):
        t = lift_lq(t)
        rep = invariance_check_lq(t)
        if rep.passed:
            t = recover_hamiltonian_lq(t)
            rep.add(hamiltonian_restriction_check_lq(t))
        return t, rep
    t = lift(t)
    rep = invariance_check(t)
    if rep.passed:
        t = t.with_dynamics(H_tilde=recover_extended_hamiltonian(t))
        rep.add(hamiltonian_restriction_check(t))
    return t, rep


def cmd_lift(args) -> int:
    kind, obj, _ = _load_any(args.spec)
    if kind == "system":
        obj, _rep = _thicken(obj, args)
    t, rep = _lift_any(obj)
    text = _report_text(rep)
    if hasattr(t, "gamma_tilde"):
        text += f"\ngamma_tilde = {t.gamma_tilde}\nH_tilde = {t.H_tilde}"
    _emit(args, _thick_json(t, rep), text)
    return 0 if rep.passed else 1


def cmd_lagrangian(args) -> int:
    from .lagrange import cartan_data, euler_lagrange_system, synthesize_lagrangian, verify_theorem1
    from .linear import LinearThickening, lagrangian_check_lq, theorem1_lq

    kind, obj, _ = _load_any(args.spec)
    if kind == "system":
        obj, _ = _thicken(obj, args)
    if (obj.Q_tilde if isinstance(obj, LinearThickening) else obj.H_tilde) is None:
        obj, rep = _lift_any(obj)
        if not rep.passed:
            _emit(args, _report_json(rep), _report_text(rep))
            return 1
    if isinstance(obj, LinearThickening):
        reps = (lagrangian_check_lq(obj), theorem1_lq(obj))
        _emit(args, _report_json(*reps), _report_text(*reps))
        return 0 if all(r.passed for r in reps) else 1
    lag = synthesize_lagrangian(obj)
    cd = cartan_data(lag)
    el = euler_lagrange_system(lag)
    rep = verify_theorem1(obj, lag, cd)
    data = lagrangian_to_json(lag)
    data["euler_lagrange"] = el.to_json()
    data["euler_lagrange_text"] = el.pretty()
    data["report"] = rep.to_json()
    text = f"L = {lag.L}\n{el.pretty()}\n{rep}"
    _emit(args, data, text)
    return 0 if rep.passed else 1


def cmd_gnh(args) -> int:
    from .gnh import LinQuadSystem, run_gnh, to_linear_quadratic
    from .lagrange import cartan_data, synthesize_lagrangian
    from .linear import LinearThickening, cartan_lq

    kind, obj, _ = _load_any(args.spec)
    if kind == "thickened" and obj.H_tilde is not None:
        lq = to_linear_quadratic(cartan_data(synthesize_lagrangian(obj)))
    elif kind == "linear_thickened" and obj.Q_tilde is not None:
        lq = cartan_lq(obj)
    elif isinstance(obj, LinQuadSystem):
        lq = obj
    elif kind == "system":
        lq = to_linear_quadratic(obj)
    else:
        raise UsageError("gnh needs a system spec or a lifted thickening")
    chain = run_gnh(lq)
    data = chain.to_json()
    data["labels"] = list(lq.labels)
    text = f"dims {chain.dims}, iterations {chain.iterations}" + (", empty" if chain.empty else "")
    _emit(args, data, text)
    return 1 if chain.empty else 0


def cmd_simulate(args) -> int:
    import numpy as np

    from .gnh import LinQuadSystem, to_linear_quadratic
    from .numsim import SingularStep, TrajectoryOverflow, conservation_report, integrate_midpoint

    kind, obj, _ = _load_any(args.spec)
    if kind != "system":
        raise UsageError("simulate expects a system spec")
    lq = obj if isinstance(obj, LinQuadSystem) else to_linear_quadratic(obj)
    if lq.A is None:
        raise UsageError("system has no dynamics to simulate")
    cfg = args.simulate or SimulationConfig(steps=1000)
    x0 = np.random.default_rng(args.seed).uniform(-1.0, 1.0, lq.n)
    try:
        traj = integrate_midpoint(lq, x0, cfg.dt, cfg.steps)
    except (SingularStep, TrajectoryOverflow) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rep = conservation_report(traj, {"H": lq}, cfg.drift_tol)
    if args.format == "text":
        _emit(args, traj.to_csv())
    else:
        _emit(args, {"trajectory": traj.to_json(), "report": rep.to_json()})
    return 0 if rep.passed else 1


def cmd_gen(args) -> int:
    from . import models

    if args.model == "rotor":
        data = system_to_spec(models.rotor_example())
    elif args.model == "nonflat":
        data = system_to_spec(models.nonflat_example()[0])
    elif args.model == "weak":
        data = system_to_spec(models.weak_flat_example()[0])
    elif args.model == "random":
        try:
            data = system_to_spec(models.random_system(args.dim, args.kernel_dim, args.seed))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        if args.n < 2:
            raise UsageError("lattice needs --n >= 2")
        lm = models.lattice_maxwell(args.n)
        data = linear_to_spec(lm.system)
        if args.ambient:
            with open(args.ambient, "w", encoding="utf-8") as fh:
                fh.write(dumps(lm.to_json()))
    _emit(args, data)
    return 0


def cmd_pipeline(args) -> int:
    cfg_sim = args.simulate
    if args.corpus:
        res = run_corpus(args.corpus, args.seed, cfg_sim, workers=args.workers)
        lines = [f"corpus: {res['count']} systems, {'PASS' if res['passed'] else 'FAIL'}"]
        lines += [f"  seed {m['seed']} dim {m['dim']} kernel {m['kernel_dim']}: failed {m['failed_stages']}"
                  for m in res["members"] if not m["passed"]]
        _emit(args, res, "\n".join(lines))
        return 0 if res["passed"] else 1
    text = _read(args.spec)
    sys_ = parse_system(loads(text))
    conn = _load_connection(args, getattr(sys_, "chart", ()))
    rep = run_pipeline(sys_, PipelineConfig(seed=args.seed, simulate=cfg_sim, connection=conn), input_hash(text))
    _emit(args, rep.to_json(), rep.text())
    return rep.exit_code


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coiso", description="Symplectic thickening and Lagrangian synthesis for "
                                "pre-symplectic Hamiltonian systems.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("spec", nargs="?", default="-", help="input JSON file, '-' for stdin (default)")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--format", choices=("json", "text"), default="json")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    common(sub.add_parser("check", help="validate a system spec")).set_defaults(fn=cmd_check)
    sp = common(sub.add_parser("thicken", help="build the symplectic thickening"))
    sp.add_argument("--connection", help="connection JSON file (symbolic systems)")
    sp.set_defaults(fn=cmd_thicken)
    sp = common(sub.add_parser("lift", help="lift the dynamics and check invariance"))
    sp.add_argument("--connection")
    sp.set_defaults(fn=cmd_lift)
    sp = common(sub.add_parser("lagrangian", help="synthesize the Lagrangian and verify it"))
    sp.add_argument("--connection")
    sp.set_defaults(fn=cmd_lagrangian)
    common(sub.add_parser("gnh", help="run the constraint algorithm")).set_defaults(fn=cmd_gnh)
    sp = common(sub.add_parser("simulate", help="midpoint trajectory (text format = CSV)"))
    sp.add_argument("--simulate", nargs="+", metavar="KEY=VALUE")
    sp.set_defaults(fn=cmd_simulate)
    sp = common(sub.add_parser("gen", help="emit a reference system spec"), spec=False)
    sp.add_argument("model", choices=("rotor", "nonflat", "weak", "random", "maxwell"))
    sp.add_argument("--n", type=int, default=2, help="lattice sites per axis (maxwell)")
    sp.add_argument("--dim", type=int, default=4)
    sp.add_argument("--kernel-dim", type=int, default=2)
    sp.add_argument("--ambient", help="also write the lattice ambient map to this file")
    sp.set_defaults(fn=cmd_gen)
    sp = common(sub.add_parser("pipeline", help="run every stage and report"))
    sp.add_argument("--connection")
    sp.add_argument("--simulate", nargs="+", metavar="KEY=VALUE", help="e.g. dt=0.01 steps=10000")
    sp.add_argument("--corpus", type=int, default=0, help="run N seeded random systems instead of a spec")
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(fn=cmd_pipeline)
    return p


def _fix_simulate(args):
    """--simulate takes KEY=VALUE words; a trailing bare word is the input path."""
    words = getattr(args, "simulate", None)
    if not words:
        return
    opts = [w for w in words if "=" in w]
    rest = [w for w in words if "=" not in w]
    if rest:
        if args.spec != "-" or len(rest) > 1:
            raise UsageError(f"unexpected arguments {rest}")
        args.spec = rest[0]
    try:
        args.simulate = SimulationConfig.parse(" ".join(opts))
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _fix_simulate(args)
        return args.fn(args)
    except (SpecError, UsageError, NotLinearQuadratic) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:  # pragma: no cover - loads() converts these
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
