"""Floating-point witnesses: implicit midpoint trajectories and diagnostics.

For affine Gamma(x) = A x + b the midpoint rule is the Cayley map

    (I - dt/2 A) x_{k+1} = (I + dt/2 A) x_k + dt b,

so one factorisation serves the whole run. Quadratic first integrals of a
linear Hamiltonian flow are conserved by this map up to roundoff.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .gnh import LinQuadSystem
from .poly import Poly
from .report import Check, Report


class SingularStep(ArithmeticError):
    def __init__(self, dt, cond):
        super().__init__(f"step matrix I - dt/2 A is singular at dt = {dt} (condition number {cond:.3g})")
        self.dt = dt
        self.cond = cond


# beyond this the quadratic invariants themselves overflow
OVERFLOW_BOUND = 1e150


class TrajectoryOverflow(ArithmeticError):
    def __init__(self, step):
        super().__init__(f"trajectory exceeded {OVERFLOW_BOUND:.0e} at step {step}")
        self.step = step


@dataclass
class Trajectory:
    labels: tuple
    dt: float
    steps: int
    states: np.ndarray  # (steps + 1, dim)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        if self.states.shape != (self.steps + 1, len(self.labels)):
            raise ValueError(f"states have shape {self.states.shape}, expected {(self.steps + 1, len(self.labels))}")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def column(self, name) -> np.ndarray:
        return self.states[:, self.labels.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("t",) + self.labels)
        for t, row in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "dt": self.dt, "steps": self.steps, "states": self.states.tolist()}

    @classmethod
    def from_json(cls, data) -> "Trajectory":
        return cls(tuple(data["labels"]), float(data["dt"]), int(data["steps"]), np.asarray(data["states"], float))


def _dense(M) -> np.ndarray:
    return M.to_numpy() if hasattr(M, "to_numpy") else np.asarray(M, dtype=float)


def step_map(A, b, dt: float):
    """(S, s) with x_{k+1} = S x_k + s for the midpoint rule on x' = A x + b."""
    A = _dense(A)
    b = np.asarray([float(v) for v in b])
    n = A.shape[0]
    I = np.eye(n)
    M = I - 0.5 * dt * A
    cond = np.linalg.cond(M) if n else 1.0
    if not np.isfinite(cond) or cond * np.finfo(float).eps > 1e-6:
        raise SingularStep(dt, cond)
    S = np.linalg.solve(M, I + 0.5 * dt * A)
    s = np.linalg.solve(M, dt * b)
    return S, s


def integrate_midpoint(sys: LinQuadSystem, x0: Sequence, dt, steps: int) -> Trajectory:
    if sys.A is None:
        raise ValueError("system has no dynamics")
    dt_f = float(Fraction(dt)) if isinstance(dt, str) else float(dt)
    if not dt_f > 0:
        raise ValueError("dt must be positive")
    S, s = step_map(sys.A, sys.b, dt_f)
    x = np.asarray([float(v) for v in x0])
    if x.shape != (sys.n,):
        raise ValueError(f"initial state has length {x.size}, expected {sys.n}")
    out = np.empty((steps + 1, sys.n))
    out[0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            x = S @ x + s
            if not np.all(np.abs(x) < OVERFLOW_BOUND):
                raise TrajectoryOverflow(k + 1)
            out[k + 1] = x
    return Trajectory(sys.labels, dt_f, steps, out)


def compare_projected_flow(base: Trajectory, thick: Trajectory, tol: float = 1e-8, relative: bool = False) -> Check:
    """Max |base - first block of thick|. With ``relative`` the tolerance is
    scaled by max(1, max |x|) so exponentially growing flows are judged fairly."""
    if base.steps != thick.steps or base.dt != thick.dt:
        raise ValueError("trajectories are on different time grids")
    k = len(base.labels)
    if thick.labels[:k] != base.labels:
        raise ValueError("thickened chart does not extend the base chart")
    err = float(np.max(np.abs(thick.states[:, :k] - base.states))) if base.states.size else 0.0
    scale = max(1.0, float(np.max(np.abs(base.states)))) if relative and base.states.size else 1.0
    ok = err <= tol * scale
    return Check("projected_flow", "pass" if ok else "fail",
                 "" if ok else f"max discrepancy {err:.3e} > {tol * scale:.3g}",
                 {"max_discrepancy": err, "tolerance": tol, "scale": scale})


def quadratic_values(lq: LinQuadSystem, states: np.ndarray) -> np.ndarray:
    Q = lq.Q.to_numpy()
    c = np.asarray([float(v) for v in lq.c])
    return 0.5 * np.einsum("ki,ij,kj->k", states, Q, states) + states @ c + float(lq.h0)


def poly_values(p: Poly, states: np.ndarray) -> np.ndarray:
    out = np.zeros(states.shape[0])
    for exp, coef in p.terms.items():
        term = np.full(states.shape[0], float(coef))
        for i, e in enumerate(exp):
            if e:
                term = term * states[:, i] ** e
        out += term
    return out


def conservation_report(traj: Trajectory, quantities, tol: float = 1e-8, relative: bool = False) -> Report:
    """Max drift |f(x_k) - f(x_0)| per quantity (a Poly or a LinQuadSystem's H).

    With ``relative`` the tolerance is scaled by max(1, max |x|^2), the size of
    the quadratic terms whose cancellation the drift measures.
    """
    rep = Report("conservation")
    items = quantities.items() if isinstance(quantities, dict) else ((f"q{i}", q) for i, q in enumerate(quantities))
    scale = 1.0
    if relative and traj.states.size:
        scale = max(1.0, float(np.max(np.sum(traj.states ** 2, axis=1))))
    for name, q in items:
        if isinstance(q, LinQuadSystem):
            if q.labels != traj.labels:
                raise ValueError(f"quantity {name} lives on a different chart")
            vals = quadratic_values(q, traj.states)
        else:
            if tuple(q.chart) != traj.labels:
                raise ValueError(f"quantity {name} lives on a different chart")
            vals = poly_values(q, traj.states)
        drift = float(np.max(np.abs(vals - vals[0])))
        ok = drift <= tol * scale
        rep.add(Check(f"drift[{name}]", "pass" if ok else "fail", "" if ok else f"drift {drift:.3e} > {tol * scale:.3g}",
                      {"max_drift": drift, "tolerance": tol, "scale": scale,
                       "max_abs_value": float(np.max(np.abs(vals)))}))
    return rep


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
