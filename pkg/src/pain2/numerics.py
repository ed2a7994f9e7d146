"""Complex-time integration, conservation monitoring and pole continuation.

The integrator is the Dormand-Prince 5(4) pair with a PI step-size
controller.  Time runs along a polyline in the complex plane; on each
segment ``t = t_a + e * tau`` with real arclength ``tau`` and unit direction
``e``, so the state obeys ``du/dtau = e * f(t, u)``.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate._ivp.rk import RK45

from .algebra import RatFn, as_ratfn, substitute
from .algebra.registry import REGISTRY
from .holomorphy import Chart, build_chart, chart_pushforward
from .systems import HamSystem, ParameterPoint, build_system
from .transforms import BirationalMap

# Dormand-Prince tableau, error weights and dense-output matrix.
_A, _B, _C, _E, _P = RK45.A, RK45.B, RK45.C, RK45.E, RK45.P
_STAGES = len(_C)


class StepSizeUnderflow(ArithmeticError):
    def __init__(self, coord, t, value):
        super().__init__(
            f"step size underflow at t = {t:.6g}: coordinate {coord} has magnitude {abs(value):.3g}"
        )
        self.coord = coord
        self.t = t


class StepLimitExceeded(RuntimeError):
    def __init__(self, limit, coord, t, value):
        super().__init__(
            f"step limit {limit} reached at t = {t:.6g}; largest coordinate {coord} = {abs(value):.3g}"
        )
        self.coord = coord
        self.t = t


class ContinuationError(ArithmeticError):
    """No chart of the atlas renders the state bounded."""


class NearIndeterminacy(ArithmeticError):
    """A sample lies too close to a vanishing denominator of a map."""


# ----- numeric parameters -------------------------------------------------


def _exact(v):
    if isinstance(v, str):
        v = v.strip()
        try:
            return Fraction(v)
        except ValueError:
            return complex(v.replace("i", "j"))
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    return v


@dataclass(frozen=True)
class NumParams:
    """Numeric alpha2, alpha3; alpha1 follows from the relation when one is set."""

    alpha2: object = 0
    alpha3: object = 0
    relation: int | None = 1
    alpha1: object = None
    constants: tuple = ()  # (name, value) pairs for a, a1, a2, a3

    def __post_init__(self):
        if self.relation is None and self.alpha1 is None:
            raise ValueError("alpha1 is required when no relation is active")
        if self.relation is not None and self.alpha1 is not None:
            a1 = (self.relation - 2 * _exact(self.alpha2) - _exact(self.alpha3)) / 2
            if abs(complex(a1) - complex(_exact(self.alpha1))) > 1e-14:
                raise ValueError("alpha1 is inconsistent with the parameter relation")

    def values(self) -> dict:
        a2, a3 = _exact(self.alpha2), _exact(self.alpha3)
        if self.relation is not None:
            a1 = (self.relation - 2 * a2 - a3) / 2
        else:
            a1 = _exact(self.alpha1)
        out = {"alpha1": a1, "alpha2": a2, "alpha3": a3}
        out.update({k: _exact(v) for k, v in self.constants})
        return out

    def complex_values(self) -> dict:
        return {k: complex(v) for k, v in self.values().items()}

    def point(self) -> ParameterPoint | None:
        """Exact ParameterPoint when all values are rational, else ``None``."""
        vals = self.values()
        if not all(isinstance(vals[n], Fraction) for n in ("alpha2", "alpha3")):
            return None
        kw = {n: RatFn.const(vals[n]) for n in ("alpha2", "alpha3")}
        if self.relation is None:
            if not isinstance(vals["alpha1"], Fraction):
                return None
            kw["alpha1"] = RatFn.const(vals["alpha1"])
        return ParameterPoint.numeric(self.relation, **kw)


# ----- compilation of rational functions ----------------------------------


def _poly_code(P) -> str:
    if P.is_zero():
        return "0.0"
    terms = []
    for exps, c in P.exponents():
        factors = [repr(float(c))]
        for name, e in zip(REGISTRY.names, exps):
            if e == 1:
                factors.append(name)
            elif e:
                factors.append(f"{name}**{e}")
        terms.append("*".join(factors))
    return " + ".join(terms)


def compile_functions(funcs, argnames, constants: dict | None = None):
    """Compile RatFns into one Python callable ``f(*argnames) -> tuple``.

    Symbols not in ``argnames`` are looked up in ``constants`` (numeric).
    """
    exprs = []
    for F in funcs:
        F = as_ratfn(F)
        num = _poly_code(F.num)
        if F.den.is_one():
            exprs.append(f"({num})")
        else:
            exprs.append(f"({num})/({_poly_code(F.den)})")
    args = ", ".join(argnames)
    src = f"def _f({args}):\n    return ({', '.join(exprs)},)\n"
    ns = {k: complex(v) for k, v in (constants or {}).items()}
    exec(compile(src, "<pain2-compiled>", "exec"), ns)
    return ns["_f"]


def _den_functions(funcs, argnames, constants):
    dens = [as_ratfn(F).den for F in funcs]
    return compile_functions([RatFn(d) for d in dens], argnames, constants)


# ----- fields in charts ---------------------------------------------------


@dataclass
class _ChartField:
    chart: str
    coords: tuple
    rhs: object  # f(t, *u) -> tuple
    to_principal: object | None  # chart -> principal coordinates
    from_principal: object | None  # principal -> chart coordinates


def _symbolic(S: HamSystem) -> HamSystem:
    return S.with_params(ParameterPoint.symbolic(S.params.relation))


def _principal_field(S: HamSystem, params: NumParams) -> _ChartField:
    S = _symbolic(S)
    consts = params.complex_values()
    f = compile_functions(S.vector_field.components, (S.time,) + tuple(S.coords), consts)
    return _ChartField("principal", tuple(S.coords), f, None, None)


def _chart_field(S: HamSystem, C: Chart, params: NumParams) -> _ChartField:
    S = _symbolic(S)
    consts = params.complex_values()
    V = chart_pushforward(S, C)
    fwd, inv = C.specialized(S.params)
    f = compile_functions(V.components, (S.time,) + tuple(C.new), consts)
    to_p = compile_functions(inv, (S.time,) + tuple(C.new), consts)
    from_p = compile_functions(fwd, (S.time,) + tuple(C.old), consts)
    return _ChartField(C.id, tuple(C.new), f, to_p, from_p)


# ----- trajectories -------------------------------------------------------


@dataclass
class Sample:
    t: complex
    chart: str
    state: np.ndarray
    err: float


@dataclass
class _Step:
    s0: float  # path parameter at step start
    t0: complex
    direction: complex
    h: float
    y0: np.ndarray
    Q: np.ndarray
    chart: str


@dataclass
class Trajectory:
    system: str
    coords: tuple
    samples: list = field(default_factory=list)
    switches: list = field(default_factory=list)
    conservation: dict = field(default_factory=dict)
    rejected: int = 0
    steps: list = field(default_factory=list, repr=False)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def states(self) -> np.ndarray:
        return np.array([s.state for s in self.samples])

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    def drift(self, name: str) -> float:
        v = np.array(self.conservation[name])
        v = v[np.isfinite(v)]
        return float(np.max(np.abs(v - v[0]))) if len(v) else math.nan

    def max_error(self) -> float:
        return max((s.err for s in self.samples), default=0.0)

    def at_param(self, s: float) -> np.ndarray:
        """Dense-output state at path parameter ``s`` (arclength from the start)."""
        if not self.steps:
            raise ValueError("trajectory was integrated without dense output")
        starts = [st.s0 for st in self.steps]
        k = max(0, min(bisect.bisect_right(starts, s) - 1, len(self.steps) - 1))
        st = self.steps[k]
        theta = (s - st.s0) / st.h
        powers = np.array([theta ** (j + 1) for j in range(_P.shape[1])])
        return st.y0 + st.h * (st.Q @ powers)

    def to_json_lines(self) -> str:
        lines = []
        for smp in self.samples:
            state = []
            for v in smp.state:
                state.extend([float(v.real), float(v.imag)])
            lines.append(json.dumps({
                "t_re": float(smp.t.real), "t_im": float(smp.t.imag),
                "chart": smp.chart, "state": state, "err": float(smp.err),
            }))
        return "\n".join(lines) + "\n"


# ----- the integrator -----------------------------------------------------


def _parse_init(init, coords):
    if isinstance(init, dict):
        missing = set(coords) - set(init)
        if missing:
            raise ValueError(f"initial value missing for {', '.join(sorted(missing))}")
        return np.array([complex(_exact(init[c])) for c in coords], dtype=complex)
    arr = np.asarray(init, dtype=complex)
    if arr.shape != (len(coords),):
        raise ValueError(f"initial state needs {len(coords)} entries")
    return arr


class _Run:
    """State machine driving DP5(4) along a polyline, with optional chart switching."""

    SAFETY = 0.9
    ALPHA = 0.7 / 5
    BETA = 0.4 / 5
    FAC_MIN = 0.2
    FAC_MAX = 5.0

    def __init__(self, S, params, tol, monitors, dense, max_steps):
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.S = S
        self.params = params
        self.tol = tol
        self.dense = dense
        self.max_steps = max_steps
        self.principal = _principal_field(S, params)
        self.field = self.principal
        consts = params.complex_values()
        self.monitors = {
            k: compile_functions([_symbolic(S).specialize(as_ratfn(F))], (S.time,) + tuple(S.coords), consts)
            for k, F in (monitors or {}).items()
        }
        self.traj = Trajectory(S.id, tuple(S.coords))
        self.traj.conservation = {k: [] for k in self.monitors}

    # hooks for continuation
    def after_step(self, t, y):
        return None

    def principal_state(self, t, y):
        if self.field.to_principal is None:
            return y
        return np.array(self.field.to_principal(t, *y), dtype=complex)

    def record(self, t, y, err):
        self.traj.samples.append(Sample(t, self.field.chart, y.copy(), err))
        # invariants are only logged while in the principal chart
        for k, m in self.monitors.items():
            v = m(t, *y)[0] if self.field.to_principal is None else complex("nan")
            self.traj.conservation[k].append(v)

    def f(self, t, y, direction):
        return direction * np.array(self.field.rhs(t, *y), dtype=complex)

    def run(self, init, path):
        path = [complex(p) for p in path]
        if len(path) < 2:
            raise ValueError("path needs at least two points")
        y = _parse_init(init, self.S.coords)
        self.record(path[0], y, 0.0)
        s_total = 0.0
        for ta, tb in zip(path, path[1:]):
            L = abs(tb - ta)
            if L == 0:
                continue
            e = (tb - ta) / L
            y = self.segment(ta, e, L, y, s_total)
            s_total += L
        return self.traj

    def _error_norm(self, y, y_new, err):
        scale = self.tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
        with np.errstate(invalid="ignore"):
            r = np.max(np.abs(err) / scale)
        return r if np.isfinite(r) else math.inf

    def segment(self, ta, e, L, y, s0):
        tau = 0.0
        K = np.empty((_STAGES + 1, len(y)), dtype=complex)
        with np.errstate(all="ignore"):
            K[0] = self.f(ta, y, e)
        h = self._initial_step(ta, e, y, K[0], L)
        err_prev = 1e-4
        steps = 0
        while tau < L:
            if steps >= self.max_steps:
                k = int(np.argmax(np.abs(y)))
                raise StepLimitExceeded(self.max_steps, self.field.coords[k], ta + e * tau, y[k])
            h = min(h, L - tau)
            t = ta + e * tau
            with np.errstate(all="ignore"):
                for i in range(1, _STAGES):
                    dy = K[:i].T @ _A[i, :i] * h
                    K[i] = self.f(t + e * _C[i] * h, y + dy, e)
                y_new = y + h * (K[:_STAGES].T @ _B)
                K[_STAGES] = self.f(t + e * h, y_new, e)
                err_vec = h * (K.T @ _E)
            err = self._error_norm(y, y_new, err_vec)
            if err <= 1.0:
                steps += 1
                if self.dense:
                    self.traj.steps.append(_Step(s0 + tau, t, e, h, y.copy(), K.T @ _P, self.field.chart))
                tau = L if L - tau - h <= 1e-15 * max(1.0, L) else tau + h
                t_new = ta + e * tau
                y = y_new
                self.record(t_new, y, err * self.tol)
                switched = self.after_step(t_new, y)
                if switched is not None:
                    y = switched
                    with np.errstate(all="ignore"):
                        K[0] = self.f(t_new, y, e)
                    h = self._initial_step(t_new, e, y, K[0], L - tau)
                    err_prev = 1e-4
                    continue
                K[0] = K[_STAGES]
                fac = self.SAFETY * max(err, 1e-10) ** -self.ALPHA * err_prev ** self.BETA
                h *= min(self.FAC_MAX, max(self.FAC_MIN, fac))
                err_prev = max(err, 1e-4)
            else:
                self.traj.rejected += 1
                fac = self.SAFETY * err ** (-1 / 5) if math.isfinite(err) else self.FAC_MIN
                h *= max(self.FAC_MIN, min(1.0, fac))
                if h < 1e-14 * max(1.0, abs(t)):
                    k = int(np.argmax(np.abs(y)))
                    raise StepSizeUnderflow(self.field.coords[k], t, y[k])
        return y

    def _initial_step(self, ta, e, y, f0, L):
        d0 = np.max(np.abs(y) / (1 + np.abs(y)))
        d1 = np.max(np.abs(f0) / (1 + np.abs(y)))
        if not np.isfinite(d1):
            return 1e-12
        h0 = 0.01 * max(d0, 1e-5) / d1 if d1 > 1e-10 else 1e-3
        return float(min(L, max(h0, 1e-12)))


def integrate(S: HamSystem, params: NumParams, init, path, tol=1e-10, monitors=None,
              dense=False, max_steps=200_000) -> Trajectory:
    """Adaptive DP5(4) integration of ``S`` along the complex-time polyline ``path``.

    ``init`` is the state at ``path[0]``.  ``monitors`` maps names to
    functions of the phase variables (and time) evaluated at every sample.
    """
    return _Run(S, params, tol, monitors, dense, max_steps).run(init, path)


# ----- continuation through poles ------------------------------------------


class _ContinuationRun(_Run):
    def __init__(self, S, params, tol, atlas, threshold, monitors, dense, max_steps):
        super().__init__(S, params, tol, monitors, dense, max_steps)
        self.threshold = threshold
        self.back = math.sqrt(threshold) if math.isfinite(threshold) else math.inf
        self.charts = [_chart_field(S, build_chart(c) if isinstance(c, str) else c, params) for c in atlas]

    def after_step(self, t, y):
        size = np.max(np.abs(y))
        if self.field is self.principal:
            if size <= self.threshold:
                return None
            return self._switch(t, y, y)
        u = self.principal_state(t, y)
        if np.all(np.isfinite(u)) and np.max(np.abs(u)) <= self.back:
            return self._enter(t, y, self.principal, u, u)
        if size <= self.threshold:
            return None
        return self._switch(t, y, u)

    def _switch(self, t, y, u):
        best = None
        with np.errstate(all="ignore"):
            for cf in self.charts:
                if cf is self.field:
                    continue
                v = np.array(cf.from_principal(t, *u), dtype=complex)
                if not np.all(np.isfinite(v)):
                    continue
                n = np.max(np.abs(v))
                if best is None or n < best[0]:
                    best = (n, cf, v)
        if best is None or best[0] > self.threshold:
            raise ContinuationError(
                f"no chart renders the state bounded at t = {t:.6g} (max |u| = {np.max(np.abs(u)):.3g})"
            )
        return self._enter(t, y, best[1], best[2], u)

    def _enter(self, t, y, target, v, u):
        # Round trip on the side with the larger state, in the norm-wise
        # relative sense: principal -> chart -> principal when entering a
        # chart, chart -> principal -> chart when returning.
        with np.errstate(all="ignore"):
            if target.to_principal is not None:
                ref, back = u, np.array(target.to_principal(t, *v), dtype=complex)
            else:
                ref = y
                back = np.array(self.field.from_principal(t, *v), dtype=complex)
            rt = float(np.max(np.abs(back - ref)) / max(1.0, np.max(np.abs(ref))))
        self.traj.switches.append({
            "t": t, "from": self.field.chart, "to": target.chart, "roundtrip_error": rt,
        })
        self.field = target
        self.record(t, v, 0.0)
        return v


def continue_through_pole(S: HamSystem, params: NumParams, init, path, atlas=None, tol=1e-10,
                          threshold=1e3, monitors=None, dense=False, max_steps=200_000) -> Trajectory:
    """Integrate with chart switching: whenever a coordinate exceeds ``threshold``
    the state is re-expressed in the atlas chart where it is smallest, and it
    returns to the principal chart once its principal coordinates fall below
    ``sqrt(threshold)``.

    The error control is relative to ``1 + |u|``, and the chart maps cancel
    leading terms of size ``threshold**2``, so the re-expressed state carries
    an error of roughly ``tol * threshold**2``.  Hence the modest default.
    """
    if atlas is None:
        atlas = ("thm2_1", "thm2_2", "thm2_3")
    run = _ContinuationRun(S, params, tol, atlas, threshold, monitors, dense, max_steps)
    return run.run(init, path)


def estimate_poles(traj: Trajectory) -> list:
    """Times where a chart's first coordinate (the reciprocal of the blowing-up
    variable) crosses zero, by linear interpolation between samples."""
    poles = []
    prev = None
    for smp in traj.samples:
        if smp.chart == "principal":
            prev = None
            continue
        if prev is not None and prev.chart == smp.chart:
            a, b = prev.state[0], smp.state[0]
            if (a.real <= 0 <= b.real or b.real <= 0 <= a.real) and a != b:
                poles.append(prev.t + (smp.t - prev.t) * a / (a - b))
        prev = smp
    return poles


def detour_path(start, end, center, radius, n=32) -> list:
    """Straight path from ``start`` to ``end`` with a half-circle around ``center``.

    Assumes ``center`` lies on the segment; the arc passes on the left.
    """
    start, end, center = complex(start), complex(end), complex(center)
    e = (end - start) / abs(end - start)
    arc = [center + radius * e * np.exp(1j * np.pi * (1 - k / n)) for k in range(1, n + 1)]
    return [start, center - radius * e] + arc + [end]


# ----- numerical cross-checks ---------------------------------------------


def numeric_conjugacy_check(source: HamSystem, M: BirationalMap, target: HamSystem,
                            trajectory: Trajectory, params: NumParams, n_samples=40,
                            delta=3e-4, eps=1e-8) -> float:
    """Max over samples of ``|d/dt M(u(t)) - f_target(t, M(u(t)))|``.

    The derivative is the fourth-order central difference of the mapped dense
    output.  The trajectory must be a real-time, single-chart, dense run.
    """
    if not trajectory.steps:
        raise ValueError("numeric_conjugacy_check needs a dense trajectory")
    consts = params.complex_values()
    S = _symbolic(source)
    comps = [S.specialize(c) for c in M.components]
    argn = (source.time,) + tuple(source.coords)
    Mf = compile_functions(comps, argn, consts)
    Md = _den_functions(comps, argn, consts)
    T = _symbolic(target)
    g = compile_functions(T.vector_field.components, (target.time,) + tuple(target.coords), consts)
    t0 = trajectory.samples[0].t
    s_end = trajectory.steps[-1].s0 + trajectory.steps[-1].h
    direction = trajectory.steps[0].direction
    worst = 0.0
    for s in np.linspace(2 * delta, s_end - 2 * delta, n_samples):
        def X(sv):
            u = trajectory.at_param(sv)
            t = t0 + direction * sv
            if min(abs(d) for d in Md(t, *u)) < eps:
                raise NearIndeterminacy(f"sample at t = {t:.6g} is within {eps} of a pole of {M.id}")
            return np.array(Mf(t, *u), dtype=complex)

        d = (X(s - 2 * delta) - 8 * X(s - delta) + 8 * X(s + delta) - X(s + 2 * delta)) / (12 * delta)
        d = d / direction
        t = t0 + direction * s
        r = np.max(np.abs(d - np.array(g(t, *X(s)), dtype=complex)))
        worst = max(worst, float(r))
    return worst


@dataclass
class ParticularSolutionReport:
    symbolic_residuals: tuple  # (ydot, wdot) restricted to y = w = 0, alpha1 free
    symbolic_pass: bool
    max_yw: float
    max_xz_mismatch: float
    numeric_pass: bool
    path: list  # complex-time path actually used

    @property
    def passed(self) -> bool:
        return self.symbolic_pass and self.numeric_pass


def pole_avoiding_path(S: HamSystem, params: NumParams, init, start, end, tol, radius=0.25, max_poles=8):
    """A path from ``start`` to ``end`` along the real segment, detouring
    around every point where plain integration of ``S`` breaks down."""
    path = [complex(start), complex(end)]
    for _ in range(max_poles + 1):
        try:
            integrate(S, params, init, path, tol=tol)
            return path
        except (StepSizeUnderflow, StepLimitExceeded) as exc:
            tp = complex(exc.t)
            k = next(i for i in range(len(path) - 1)
                     if abs(path[i] - tp) + abs(tp - path[i + 1]) <= abs(path[i] - path[i + 1]) + 1e-9)
            detour = detour_path(path[k], path[k + 1], tp.real + 0j if abs(tp.imag) < 1e-12 else tp, radius)
            path = path[:k] + detour + path[k + 2:]
    raise ContinuationError(f"more than {max_poles} singularities on the path")


def particular_solution_check(alpha3="1/2", x0=0, z0=1, t_end=3.0, tol=1e-12,
                              yw_tol=1e-9, xz_tol=1e-7, alpha1="0") -> ParticularSolutionReport:
    """The plane ``y = w = 0`` of ``sys14`` and the reduced planar system ``sys16``.

    Symbolic part: derivatives of ``y`` and ``w`` restricted to the plane,
    with ``alpha1`` left free (reported) and then set to the given value.
    Numeric part: integrate ``sys14`` from ``(x0, 0, z0, 0)`` and ``sys16``
    from ``(x0, z0)`` from 0 to ``t_end`` and compare.  If the solution has a
    movable pole on the real segment, both runs take the same complex detour.
    """
    free = build_system("sys14", ParameterPoint(None))
    on_plane = {"y": RatFn.const(0), "w": RatFn.const(0)}
    res = tuple(substitute(free.vector_field[c], on_plane) for c in ("y", "w"))
    a1 = RatFn.const(Fraction(alpha1))
    symbolic_pass = all(substitute(r, {"alpha1": a1}).is_zero() for r in res)

    a3 = Fraction(alpha3)
    a2 = (1 - 2 * Fraction(alpha1) - a3) / 2
    p = NumParams(a2, a3, relation=1)
    reduced = build_system("sys16")
    path = pole_avoiding_path(reduced, p, {"x": x0, "z": z0}, 0, t_end, tol)
    red = integrate(reduced, p, {"x": x0, "z": z0}, path, tol=tol, dense=True)
    try:
        full = integrate(build_system("sys14"), p, {"x": x0, "y": 0, "z": z0, "w": 0}, path, tol=tol, dense=True)
    except (StepSizeUnderflow, StepLimitExceeded):
        return ParticularSolutionReport(res, symbolic_pass, float("inf"), float("inf"), False, path)
    st = full.states
    max_yw = float(np.max(np.abs(st[:, [1, 3]])))
    length = sum(abs(b - a) for a, b in zip(path, path[1:]))
    mismatch = 0.0
    for s_ in np.linspace(0, length, 601):
        a = full.at_param(s_)
        b = red.at_param(s_)
        mismatch = max(mismatch, abs(a[0] - b[0]), abs(a[2] - b[1]))
    numeric_pass = max_yw <= yw_tol and mismatch <= xz_tol
    return ParticularSolutionReport(res, symbolic_pass, max_yw, float(mismatch), numeric_pass, path)
