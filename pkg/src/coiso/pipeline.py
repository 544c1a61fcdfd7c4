"""The end-to-end run: validate, thicken, lift, check, synthesize, verify, simulate.

Symbolic systems go through the polynomial modules; LinQuadSystem inputs go
through the matrix fast path. Either way a stage that fails marks every later
stage as skipped.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from . import __version__
from .gnh import LinQuadSystem, NotLinearQuadratic, projected_dynamics_check, run_gnh, to_linear_quadratic
from .lagrange import cartan_data, euler_lagrange_system, gnh_bullet, synthesize_lagrangian, verify_theorem1
from .lift import LiftError, hamiltonian_restriction_check, invariance_check, lift, recover_extended_hamiltonian
from .presys import Connection, KernelError, PreSympSystem, default_connection, flatness_check, kernel_basis, validate
from .report import Check, Report
from .thicken import coisotropy_check, nondegeneracy_check, thicken

STAGES = ("validate", "connection", "thicken", "lift", "invariance", "hamiltonian",
          "lagrangian", "theorem1", "gnh", "simulation")


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 0.01
    steps: int = 10_000
    drift_tol: float = 1e-8
    flow_tol: float = 1e-8
    gauss_tol: float = 1e-12
    mu_scale: float = 1.0

    @classmethod
    def parse(cls, text: str) -> "SimulationConfig":
        """``"dt=0.01,steps=10000"`` (commas or spaces)."""
        kw: dict[str, Any] = {}
        for part in text.replace(",", " ").split():
            key, sep, val = part.partition("=")
            if not sep or key not in cls.__dataclass_fields__:
                raise ValueError(f"bad simulation option {part!r}")
            kw[key] = int(val) if key == "steps" else float(Fraction(val))
        cfg = cls(**kw)
        if cfg.dt <= 0 or cfg.steps < 0:
            raise ValueError("need dt > 0 and steps >= 0")
        return cfg


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    simulate: SimulationConfig | None = None
    connection: Connection | None = None


@dataclass
class StageResult:
    name: str
    status: str  # pass | fail | skip
    checks: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"stage": self.name, "status": self.status, "checks": [c.to_json() for c in self.checks]}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class PipelineReport:
    stages: list
    provenance: dict
    artifacts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(s.status != "fail" for s in self.stages)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def stage(self, name) -> StageResult:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"passed": self.passed, "provenance": self.provenance,
                "stages": [s.to_json() for s in self.stages], "artifacts": self.artifacts}

    def text(self) -> str:
        lines = [f"pipeline: {'PASS' if self.passed else 'FAIL'}  ({self.provenance.get('route')})"]
        for s in self.stages:
            lines.append(f"[{s.status:4}] {s.name}")
            for c in s.checks:
                if c.status == "fail" or c.residual:
                    lines.append(f"         {c.status} {c.name}: {c.residual}")
            if s.detail.get("error"):
                lines.append(f"         error: {s.detail['error']}")
        for k, v in self.artifacts.items():
            if isinstance(v, str):
                lines.append(f"{k}:")
                lines.extend("  " + ln for ln in v.splitlines())
        return "\n".join(lines)


class _Runner:
    def __init__(self):
        self.stages: list = []
        self.halted = False

    def run(self, name, fn):
        """fn returns (checks, detail); exceptions of known kinds become failures."""
        if self.halted:
            self.stages.append(StageResult(name, "skip", detail={"reason": "upstream failure"}))
            return None
        try:
            checks, detail = fn()
        except (LiftError, KernelError, NotLinearQuadratic, AssertionError, ZeroDivisionError) as exc:
            self.stages.append(StageResult(name, "fail", detail={"error": str(exc)}))
            self.halted = True
            return None
        if checks is None:
            self.stages.append(StageResult(name, "skip", detail=detail))
            return None
        status = "pass" if all(c.passed for c in checks) else "fail"
        self.stages.append(StageResult(name, status, checks, detail))
        if status == "fail":
            self.halted = True
        return status


def _checks(rep: Report) -> list:
    return list(rep.checks)


# ---------------------------------------------------------------------------
# symbolic route


def _symbolic(sys: PreSympSystem, cfg: PipelineConfig, out: dict) -> list:
    R = _Runner()
    st: dict = {}

    def s_validate():
        return _checks(validate(sys)), {}

    def s_connection():
        P = cfg.connection or sys.connection
        source = "supplied"
        if P is None:
            kernel = kernel_basis(sys.omega, sys.kernel)
            P = default_connection(sys.omega, kernel)
            source = "default"
        st["P"] = P
        rep = P.certify(sys.chart)
        checks = _checks(rep)
        full = flatness_check(P, sys.chart)
        checks.append(Check("flat", "pass" if full.passed else "skip",
                            "; ".join(c.residual for c in full.checks if c.status == "fail"),
                            {"note": "diagnostic; the invariance stage decides"} if not full.passed else {}))
        out["connection"] = {"source": source, "forms": [str(f) for f in P.forms],
                             "vertical_basis": [str(v) for v in P.vertical_basis]}
        return checks, {"rank": P.rank, "source": source}

    def s_thicken():
        t = thicken(sys, st["P"])
        st["t"] = t
        checks = [coisotropy_check(t)] + _checks(nondegeneracy_check(t))
        from .forms import d

        checks.append(Check.exact_zero("closed", d(t.omega_tilde)))
        out["omega_tilde"] = str(t.omega_tilde)
        return checks, {"extended_dim": len(t.extended_chart)}

    def s_lift():
        if sys.gamma is None:
            return None, {"reason": "no dynamics supplied"}
        t = lift(st["t"])
        st["t"] = t
        out["gamma_tilde"] = str(t.gamma_tilde)
        return [Check("base_projection", "pass")], {}

    def s_invariance():
        return _checks(invariance_check(st["t"])), {}

    def s_hamiltonian():
        t = st["t"]
        t = t.with_dynamics(H_tilde=recover_extended_hamiltonian(t))
        st["t"] = t
        out["H_tilde"] = str(t.H_tilde)
        return [hamiltonian_restriction_check(t)], {}

    def s_lagrangian():
        lag = synthesize_lagrangian(st["t"])
        st["lag"] = lag
        st["cartan"] = cartan_data(lag)
        out["L"] = str(lag.L)
        el = euler_lagrange_system(lag)
        out["euler_lagrange"] = el.pretty()
        if el.explicit is not None:
            out["euler_lagrange_field"] = str(el.explicit)
        return [Check("velocity_affine", "pass" if lag.is_velocity_affine() else "fail")], {}

    def s_theorem1():
        return _checks(verify_theorem1(st["t"], st["lag"], st["cartan"], run_gnh_check=False)), {}

    def s_gnh():
        c = gnh_bullet(st["t"], st["cartan"])
        if c.status == "skip":
            return None, c.detail
        return [c], {}

    def s_sim():
        if cfg.simulate is None:
            return None, {"reason": "not requested"}
        try:
            base = to_linear_quadratic(sys)
            thick = to_linear_quadratic(st["t"])
        except NotLinearQuadratic as exc:
            return None, {"reason": str(exc)}
        return _simulate(base, thick, cfg)

    for name, fn in zip(STAGES, (s_validate, s_connection, s_thicken, s_lift, s_invariance, s_hamiltonian,
                                 s_lagrangian, s_theorem1, s_gnh, s_sim)):
        R.run(name, fn)
    return R.stages


# ---------------------------------------------------------------------------
# matrix route


def _matrix(lq: LinQuadSystem, cfg: PipelineConfig, out: dict) -> list:
    from . import linear as L

    R = _Runner()
    st: dict = {}

    def s_validate():
        return _checks(L.validate_lq(lq)), {"dim": lq.n}

    def s_connection():
        if cfg.connection is not None:
            raise AssertionError("symbolic connections cannot be applied to a matrix system")
        conn = L.default_matrix_connection(lq)
        st["conn"] = conn
        out["connection"] = {"source": "default", "labels": [lq.labels[i] for i in conn.labels]}
        return _checks(L.certify_matrix_connection(conn, lq.Omega)), {"rank": conn.rank, "kernel_dim": conn.rank}

    def s_thicken():
        t = L.thicken_lq(lq, st["conn"])
        st["t"] = t
        return [L.coisotropy_check_lq(t)] + _checks(L.nondegeneracy_check_lq(t)), {"extended_dim": t.dim}

    def s_lift():
        if lq.A is None:
            return None, {"reason": "no dynamics supplied"}
        st["t"] = L.lift_lq(st["t"])
        return [Check("base_projection", "pass")], {}

    def s_invariance():
        return _checks(L.invariance_check_lq(st["t"])), {}

    def s_hamiltonian():
        st["t"] = L.recover_hamiltonian_lq(st["t"])
        return [L.hamiltonian_restriction_check_lq(st["t"])], {}

    def s_lagrangian():
        return _checks(L.lagrangian_check_lq(st["t"])), {}

    def s_theorem1():
        return _checks(L.theorem1_lq(st["t"], run_gnh_check=False)), {}

    def s_gnh():
        cd = L.cartan_lq(st["t"])
        chain = run_gnh(cd)
        t = st["t"]
        return [projected_dynamics_check(chain, t.A_tilde, t.b_tilde)], {"dims": chain.dims}

    def s_sim():
        if cfg.simulate is None:
            return None, {"reason": "not requested"}
        return _simulate(lq, st["t"].as_lq(), cfg)

    for name, fn in zip(STAGES, (s_validate, s_connection, s_thicken, s_lift, s_invariance, s_hamiltonian,
                                 s_lagrangian, s_theorem1, s_gnh, s_sim)):
        R.run(name, fn)
    return R.stages


# ---------------------------------------------------------------------------


def _simulate(base: LinQuadSystem, thick: LinQuadSystem, cfg: PipelineConfig):
    from .numsim import SingularStep, TrajectoryOverflow, compare_projected_flow, conservation_report, integrate_midpoint

    sc = cfg.simulate
    rng = np.random.default_rng(cfg.seed)
    x0 = rng.uniform(-1.0, 1.0, base.n)
    mu0 = sc.mu_scale * rng.uniform(-1.0, 1.0, thick.n - base.n)
    try:
        bt = integrate_midpoint(base, x0, sc.dt, sc.steps)
        tt = integrate_midpoint(thick, np.concatenate([x0, mu0]), sc.dt, sc.steps)
    except (SingularStep, TrajectoryOverflow) as exc:
        # an unstable linear flow says nothing about the construction; report and move on
        return None, {"reason": str(exc), "dt": sc.dt, "steps": sc.steps}
    checks = [compare_projected_flow(bt, tt, sc.flow_tol, relative=True)]
    checks += _checks(conservation_report(tt, {"H_tilde": thick}, sc.drift_tol, relative=True))
    checks += _checks(conservation_report(bt, {"H": base}, sc.drift_tol, relative=True))
    meta = base.metadata or {}
    if meta.get("model") == "lattice_maxwell":
        from .models import lattice_maxwell

        lm = lattice_maxwell(int(meta["N"]))
        if lm.system == base:
            g = lm.gauss_residual(tt.states)
            ok = g <= sc.gauss_tol
            checks.append(Check("gauss_constraint", "pass" if ok else "fail",
                                "" if ok else f"max |div E| = {g:.3e}", {"max_div_E": g, "tolerance": sc.gauss_tol}))
        else:
            checks.append(Check("gauss_constraint", "skip", "", {"reason": "system differs from the lattice model"}))
    return checks, {"dt": sc.dt, "steps": sc.steps}


def run_pipeline(sys, cfg: PipelineConfig | None = None, input_hash: str | None = None) -> PipelineReport:
    cfg = cfg or PipelineConfig()
    artifacts: dict = {}
    if isinstance(sys, LinQuadSystem):
        route = "matrix"
        stages = _matrix(sys, cfg, artifacts)
    else:
        route = "symbolic"
        stages = _symbolic(sys, cfg, artifacts)
    prov = {"toolkit": "coiso", "version": __version__, "seed": cfg.seed, "route": route,
            "input_hash": input_hash, "simulate": None if cfg.simulate is None else
            {"dt": cfg.simulate.dt, "steps": cfg.simulate.steps}}
    return PipelineReport(stages, prov, artifacts)


def _corpus_member(args):
    from .io import input_hash, spec_of
    from .models import random_system

    n, k, seed, sim = args
    sys = random_system(n, k, seed)
    text = json.dumps(spec_of(sys), sort_keys=True)
    rep = run_pipeline(sys, PipelineConfig(seed=seed, simulate=sim), input_hash(text))
    return seed, {"dim": n, "kernel_dim": k, "seed": seed, "passed": rep.passed,
                  "failed_stages": [s.name for s in rep.stages if s.status == "fail"]}


def run_corpus(count: int, seed: int = 0, simulate: SimulationConfig | None = None, workers: int | None = None) -> dict:
    """Independent systems in parallel; the summary is sorted by seed."""
    from .models import corpus_specs

    jobs = [(n, k, s, simulate) for n, k, s in corpus_specs(count, seed)]
    if workers == 1 or len(jobs) < 4:
        results = [_corpus_member(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_corpus_member, jobs, chunksize=4))
    results.sort(key=lambda r: r[0])
    members = [r[1] for r in results]
    return {"count": len(members), "passed": all(m["passed"] for m in members),
            "provenance": {"toolkit": "coiso", "version": __version__, "seed": seed}, "members": members}
