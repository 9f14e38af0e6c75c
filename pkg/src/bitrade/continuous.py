"""Continuous-time price dynamics ``dp_i/dt = Q_i p_i``.

The right-hand side is piecewise smooth.  Inside a cell (a zone together
with the relevant ``p1 - p2`` branch) it is given by a fixed formula; across
``p2 = p1 +/- rho`` it can jump, and where both neighbouring fields push into
the line the motion continues along it (Filippov sliding).

The integrator freezes the formula of the current cell for each step,
locates cell changes by bisection and switches to the sliding field when
needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .equilibrium import _TABLE, _forms, solve_nash
from .errors import OrientationViolated
from .model import EPS, ModelParams, PriceState
from .zones import (DeltaPBranch, Zone, ZoneLabel, _raw_label, classify,
                    classify_degenerate, delta_p_branch, h3, h4, orientation_gap,
                    p1_star, p2_star, underlying_zone)

Vec = tuple[float, float]


@dataclass(frozen=True)
class RhsValue:
    """``(p1 Q1, p2 Q2)`` at a state, with the cell it came from.

    ``source`` is ``"table"`` when a closed-form table cell was used and
    ``"equilibrium"`` when the value was computed from the equilibrium
    aggregates (zones the table does not list, zero prices).
    """

    f1: float
    f2: float
    zone: ZoneLabel
    branch: DeltaPBranch
    source: str = "table"
    swapped: bool = False


class Cell(NamedTuple):
    """A smooth piece of the vector field."""

    form: str  # table cell or equilibrium form name
    swapped: bool
    zero: int  # index of a zero price (1 or 2), 0 if none


# right-hand-side cells in the oriented frame (p2 q2 <= p1 q1)

def _table_cells(p1: float, p2: float, params: ModelParams) -> dict[str, Callable[[], Vec]]:
    Y1, Y2, q1, q2, rho = params.Y1, params.Y2, params.q1, params.q2, params.rho
    p1p, p2p = p1 + rho, p2 + rho
    return {
        "III": lambda: ((Y1 - p1 * q1) / q1, (Y2 - p2 * q2) / q2),
        "II-3": lambda: (0.0, (Y2 - p2 * q2 - p1p * (q1 - Y1 / p1)) / q2),
        "II-2a": lambda: (Y1 / q1 + (Y2 - p2 * q2) * p1 / (q1 * p1p) - p1, 0.0),
        "II-2b": lambda: (0.0, (Y2 - p1p * (q1 - Y1 / p1)) / q2 - p2),
        "II-1b": lambda: ((Y1 / p1 + Y2 / p1p - q1) * p1 / q1, -p2),
        "I-in": lambda: ((Y1 - p1 * q1) / q1, (Y2 - p2 * q2) / q2),
        "I-gt": lambda: ((Y1 - p2p * (q2 - Y2 / p2)) / q1 - p1, 0.0),
        "I-3gt": lambda: (-p1, (Y1 / p2p + Y2 / p2 - q2) * p2 / q2),
        "IV-1": lambda: ((Y1 - p1 * q1 - p2p * (q2 - Y2 / p2)) / q1, 0.0),
        "IV-2a": lambda: (0.0, (Y1 - p1 * q1) * p2 / (q2 * p2p) + Y2 / q2 - p2),
    }


def _table_key(zone: Zone, branch: DeltaPBranch) -> str | None:
    ge, le = branch.ge_minus_rho, branch.le_plus_rho
    if zone is Zone.III:
        return "III"
    if zone is Zone.II_3:
        return "II-3"
    if zone in (Zone.II_2, Zone.II_1):
        if ge:
            return "II-2a"
        return "II-2b" if zone is Zone.II_2 else "II-1b"
    if zone in (Zone.I_1, Zone.I_2, Zone.I_3):
        if ge and le:
            return "I-in"
        if not ge:
            return "II-2b" if zone is Zone.I_1 else "II-1b"
        return "I-3gt" if zone is Zone.I_3 else "I-gt"
    if zone is Zone.IV_1:
        return "IV-1"
    if zone is Zone.IV_2:
        return "IV-2a" if le else "IV-2gt"
    return None


def _field_from_profile(profile: tuple, p1: float, p2: float, params: ModelParams) -> Vec:
    """Price drift implied by an equilibrium profile.

    Equal to one discrete adjustment step: the unsold share pulls the price
    down, unspent income pushes it up.
    """
    a, b, g, d = profile
    rho, q1, q2 = params.rho, params.q1, params.q2
    q1c = q1 if p1 == 0.0 else a + g
    q2c = q2 if p2 == 0.0 else b + d
    y1c = p1 * a + (p2 + rho) * b
    y2c = (p1 + rho) * g + p2 * d
    f1 = -p1 * (q1 - q1c) / q1 + (params.Y1 - y1c) / q1
    f2 = -p2 * (q2 - q2c) / q2 + (params.Y2 - y2c) / q2
    return f1, f2


def _zero_price_field(p1: float, p2: float, params: ModelParams) -> Vec:
    # p2 = 0 (the p1 = 0 case is handled by the caller's swap)
    Y1, Y2, q1, q2, rho = params.Y1, params.Y2, params.q1, params.q2, params.rho
    alpha = min(q1, Y1 / p1) if p1 > 0 else q1
    gamma = min(max(q1 - alpha, 0.0), Y2 / (p1 + rho))
    f1, f2 = _field_from_profile((alpha, 0.0, gamma, q2), p1, 0.0, params)
    return f1, max(f2, 0.0)  # zero is absorbing for a falling price


def _eval_oriented(form: str, p1: float, p2: float, params: ModelParams) -> Vec:
    if form == "zero":
        return _zero_price_field(p1, p2, params)
    cells = _table_cells(p1, p2, params)
    if form in cells:
        return cells[form]()
    profile = _forms(PriceState(max(p1, 0.0), max(p2, 0.0)), params)[form]()
    return _field_from_profile(profile, p1, p2, params)


def eval_cell(cell: Cell, p: Vec, params: ModelParams) -> Vec:
    """Formula of ``cell`` evaluated at ``p`` (which need not lie in the cell)."""
    p1, p2 = p
    if cell.swapped:
        f2, f1 = _eval_oriented(cell.form, p2, p1, params.swapped())
        return f1, f2
    return _eval_oriented(cell.form, p1, p2, params)


def _oriented(prices: PriceState, params: ModelParams) -> bool:
    """Whether the tables apply without relabelling the regions."""
    if _raw_label(prices, params) is Zone.III:
        return True
    return orientation_gap(prices, params) >= -EPS


def _cell_and_label(prices: PriceState, params: ModelParams
                    ) -> tuple[Cell, ZoneLabel, DeltaPBranch]:
    branch = delta_p_branch(prices, params)
    if prices.p2 == 0.0 and prices.p1 > 0:
        return Cell("zero", False, 2), classify_degenerate(prices, params), branch
    if prices.p1 == 0.0 and prices.p2 > 0:
        return (Cell("zero", True, 1),
                classify_degenerate(prices.swapped(), params.swapped()), branch)
    swapped = not _oriented(prices, params)
    if swapped:
        op, opar = prices.swapped(), params.swapped()
        obranch = branch.mirrored()
    else:
        op, opar, obranch = prices, params, branch
    label = classify(op, opar)
    zone = underlying_zone(label)
    key = _table_key(zone, obranch)
    if key == "IV-2gt":
        # the table cell assumes consumer I can cover region 2's leftovers
        c = opar.q2 - opar.Y2 / op.p2
        key = "I-gt" if opar.Y1 >= (op.p2 + opar.rho) * c else "IV2b"
    if key is None:
        key = _TABLE[zone](obranch)
    return Cell(key, swapped, 0), label, branch


def cell_of(prices: PriceState, params: ModelParams) -> Cell:
    return _cell_and_label(prices, params)[0]


def rhs(prices: PriceState, params: ModelParams, strict: bool = False) -> RhsValue:
    """Right-hand side at ``prices``.

    With ``strict`` set, a state violating the ``p2 q2 < p1 q1`` orientation
    outside zone III raises :class:`OrientationViolated`; otherwise the
    regions are relabelled and the result mapped back.

    >>> v = rhs(PriceState(1, 1), ModelParams(4, 6, 2, 3, 0.5))
    >>> (v.f1, v.f2, str(v.zone))
    (1.0, 1.0, 'III')
    """
    cell, label, branch = _cell_and_label(prices, params)
    if strict and cell.swapped and cell.zero == 0:
        raise OrientationViolated(
            f"p2*q2 > p1*q1 at {prices}; swap the regions (zones.swap_regions)")
    f1, f2 = eval_cell(cell, prices.as_tuple(), params)
    tables = _table_cells(1.0, 1.0, params)
    source = "table" if cell.form in tables else "equilibrium"
    return RhsValue(f1, f2, label, branch, source, cell.swapped)


def rhs_from_equilibrium(prices: PriceState, params: ModelParams) -> Vec:
    """Right-hand side computed directly from the selected equilibrium."""
    profile = solve_nash(prices, params).profile.as_tuple()
    return _field_from_profile(profile, prices.p1, prices.p2, params)


# integration

def time_grid(dt: float, horizon: float) -> np.ndarray:
    """Fixed-step times ``min(k dt, horizon)``, shared by the fixed-step schemes."""
    n = int(math.ceil(horizon / dt - 1e-9))
    return np.minimum(np.arange(n + 1) * dt, horizon)

@dataclass(frozen=True)
class Sample:
    t: float
    prices: PriceState
    zone: str
    sliding: bool


@dataclass
class ContinuousTrajectory:
    samples: list[Sample] = field(default_factory=list)
    terminal: str = "horizon"  # or "stationary"

    @property
    def final_prices(self) -> PriceState:
        return self.samples[-1].prices

    def as_array(self) -> np.ndarray:
        return np.array([(s.t, s.prices.p1, s.prices.p2) for s in self.samples])


def _rk4(f: Callable[[Vec], Vec], p: Vec, h: float) -> Vec:
    k1 = f(p)
    k2 = f((p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]))
    k3 = f((p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]))
    k4 = f((p[0] + h * k3[0], p[1] + h * k3[1]))
    return (p[0] + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            p[1] + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))


def _euler(f: Callable[[Vec], Vec], p: Vec, h: float) -> Vec:
    k = f(p)
    return (p[0] + h * k[0], p[1] + h * k[1])


_STEPPERS = {"euler": _euler, "rk4": _rk4}

_NORMAL = (1.0, -1.0)  # gradient of p1 - p2
_SIDE_OFFSET = 1e-7


def _dot(a: Vec, b: Vec) -> float:
    return a[0] * b[0] + a[1] * b[1]


def _state(p: Vec) -> PriceState:
    return PriceState(max(float(p[0]), 0.0), max(float(p[1]), 0.0))


def _sliding_field(p: Vec, line: float, params: ModelParams) -> Vec | None:
    """Filippov field on ``p1 - p2 = line`` or ``None`` if there is no sliding.

    ``line`` is ``+rho`` or ``-rho``.  Below the line means ``p1 - p2 < line``.
    """
    h = _SIDE_OFFSET
    lo = _state((p[0] - h, p[1] + h))
    hi = _state((p[0] + h, p[1] - h))
    if lo.p1 <= 0 or hi.p2 <= 0:
        return None
    fa = eval_cell(cell_of(lo, params), p, params)
    fb = eval_cell(cell_of(hi, params), p, params)
    na, nb = _dot(_NORMAL, fa), _dot(_NORMAL, fb)
    if not (na > 0 and nb < 0):
        return None
    lam = nb / (nb - na)
    return (lam * fa[0] + (1 - lam) * fb[0], lam * fa[1] + (1 - lam) * fb[1])


def _near_band_line(p: Vec, rho: float, tol: float = 1e-8) -> float | None:
    dp = p[0] - p[1]
    for line in (rho, -rho):
        if abs(dp - line) <= tol:
            return line
    return None


def integrate(prices0: PriceState, params: ModelParams, dt: float = 1e-3,
              horizon: float = 50.0, method: str = "rk4", event_tol: float = 1e-10,
              stationary_tol: float = 0.0, record_every: int = 1,
              events: bool = True) -> ContinuousTrajectory:
    """Integrate from ``prices0`` up to ``horizon``.

    Each step uses the formula of the cell the step starts in.  When the end
    point falls in another cell the step is shortened by bisection (to
    ``event_tol`` in time) so it stops just past the boundary.  On the lines
    ``p2 = p1 +/- rho`` a Filippov sliding field takes over when both sides
    push into the line.  Prices never go below zero.

    ``stationary_tol > 0`` stops early once both components of the field are
    below it.  ``events=False`` gives the plain fixed-step scheme: every
    step uses :func:`field_at` at its start point, with no boundary location.
    """
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be positive")
    if method not in _STEPPERS:
        raise ValueError(f"method must be one of {sorted(_STEPPERS)}")
    stepper = _STEPPERS[method]
    rho = params.rho

    traj = ContinuousTrajectory()
    p: Vec = prices0.as_tuple()
    t = 0.0
    n = 0

    def label(ps: PriceState) -> str:
        return str(_cell_and_label(ps, params)[1])

    traj.samples.append(Sample(0.0, prices0, label(prices0), False))
    if not events:
        grid = time_grid(dt, horizon)
        for k in range(1, len(grid)):
            h = grid[k] - grid[k - 1]
            if method == "euler":
                f_now = field_at(_state(p), params)
                q = (p[0] + h * f_now[0], p[1] + h * f_now[1])
            else:
                q = stepper(lambda x: field_at(_state(x), params), p, h)
            line = _near_band_line(p, rho)
            sliding = line is not None and _sliding_field(p, line, params) is not None
            p = (max(q[0], 0.0), max(q[1], 0.0))
            if k % record_every == 0 or k == len(grid) - 1:
                ps = _state(p)
                traj.samples.append(Sample(float(grid[k]), ps, label(ps), sliding))
        if max(abs(x) for x in field_at(_state(p), params)) < 1e-8:
            traj.terminal = "stationary"
        return traj

    t_end = horizon * (1 - 1e-12)
    while t < t_end:
        h = min(dt, horizon - t)
        state = _state(p)
        line = _near_band_line(p, rho)
        slide = _sliding_field(p, line, params) if line is not None else None
        if slide is not None:
            q = stepper(lambda x: _sliding_field(x, line, params) or slide, p, h)
            # stay exactly on the line
            mid = 0.5 * (q[0] + q[1])
            q = (mid + 0.5 * line, mid - 0.5 * line)
            sliding = True
            f_now = slide
        else:
            cell = cell_of(state, params)
            f = lambda x, c=cell: eval_cell(c, x, params)  # noqa: E731
            f_now = f(p)
            q = stepper(f, p, h)
            sliding = False
            if min(q) < 0 or cell_of(_state(q), params) != cell:
                lo, hi = 0.0, h
                while hi - lo > event_tol:
                    mid = 0.5 * (lo + hi)
                    r = stepper(f, p, mid)
                    if min(r) >= 0 and cell_of(_state(r), params) == cell:
                        lo = mid
                    else:
                        hi = mid
                h = hi
                q = stepper(f, p, h)
                # snap to the band line so the sliding test sees it
                snap = _near_band_line(q, rho, 10 * event_tol + 1e-12)
                if snap is not None:
                    mid = 0.5 * (q[0] + q[1])
                    q = (mid + 0.5 * snap, mid - 0.5 * snap)
        q = (max(q[0], 0.0), max(q[1], 0.0))
        if q[0] == 0.0 and q[1] == 0.0:
            q = (0.0, max(p[1], 0.0)) if p[0] <= p[1] else (max(p[0], 0.0), 0.0)
        t += h
        p = q
        n += 1
        if n % record_every == 0 or t >= t_end:
            ps = _state(p)
            traj.samples.append(Sample(t, ps, label(ps), sliding))
        if stationary_tol > 0 and max(abs(f_now[0]), abs(f_now[1])) < stationary_tol:
            traj.terminal = "stationary"
            if traj.samples[-1].t != t:
                ps = _state(p)
                traj.samples.append(Sample(t, ps, label(ps), sliding))
            break
    else:
        if max(abs(x) for x in field_at(_state(p), params)) < 1e-8:
            traj.terminal = "stationary"
    return traj


def field_at(prices: PriceState, params: ModelParams) -> Vec:
    """Velocity the integrator would use at ``prices`` (sliding field on the band lines)."""
    p = prices.as_tuple()
    line = _near_band_line(p, params.rho)
    if line is not None:
        slide = _sliding_field(p, line, params)
        if slide is not None:
            return slide
    return eval_cell(cell_of(prices, params), p, params)


# stationary set and stability

@dataclass(frozen=True)
class StationarySet:
    E_tilde: PriceState
    h3_points: tuple[PriceState, ...]
    h4_points: tuple[PriceState, ...]


def stationary_set(params: ModelParams, resolution: int = 100) -> StationarySet:
    """Sampled stationary loci: ``p1 = h3(p2)`` for ``p2`` in ``[Y2/q2, p2*)``
    and ``p2 = h4(p1)`` for ``p1`` in ``[Y1/q1, p1*)``, both passing through E~."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    e = params.E_tilde
    # stop short of the axis, where the locus leaves the positive quadrant
    s = np.linspace(0.0, 1.0, resolution, endpoint=False)
    p2s = e.p2 + s * (p2_star(params) - e.p2)
    p1s = e.p1 + s * (p1_star(params) - e.p1)
    h3_pts = tuple(PriceState(max(h3(float(x), params), 0.0), float(x)) for x in p2s)
    h4_pts = tuple(PriceState(float(x), max(h4(float(x), params), 0.0)) for x in p1s)
    return StationarySet(e, h3_pts, h4_pts)


@dataclass(frozen=True)
class StabilityReport:
    point: PriceState
    max_excursion: float
    limit_points: tuple[PriceState, ...]
    limit_distances: tuple[float, ...]
    lyapunov_stable: bool
    asymptotic: bool


def stability_probe(point: PriceState, params: ModelParams, radius: float = 0.01,
                    n_probes: int = 8, horizon: float = 30.0, dt: float = 1e-2,
                    excursion_factor: float = 10.0, limit_tol: float = 1e-6
                    ) -> StabilityReport:
    """Integrate from ``n_probes`` starts on a circle of ``radius`` around ``point``.

    ``lyapunov_stable`` means no probe strayed further than
    ``excursion_factor * radius``; ``asymptotic`` means every probe ended
    within ``limit_tol`` of ``point``.
    """
    limits, dists = [], []
    excursion = 0.0
    for j in range(n_probes):
        th = 2 * math.pi * (j + 0.5) / n_probes
        start = PriceState(max(float(point.p1 + radius * math.cos(th)), 1e-12),
                           max(float(point.p2 + radius * math.sin(th)), 1e-12))
        tr = integrate(start, params, dt=dt, horizon=horizon, stationary_tol=1e-13)
        arr = tr.as_array()
        d = np.hypot(arr[:, 1] - point.p1, arr[:, 2] - point.p2)
        excursion = max(excursion, float(d.max()))
        limits.append(tr.final_prices)
        dists.append(float(d[-1]))
    return StabilityReport(
        point=point,
        max_excursion=excursion,
        limit_points=tuple(limits),
        limit_distances=tuple(dists),
        lyapunov_stable=excursion <= excursion_factor * radius,
        asymptotic=all(x <= limit_tol for x in dists),
    )


def zone_iii_solution(prices0: PriceState, params: ModelParams, t: float) -> PriceState:
    """Closed-form zone-III solution ``p_i(t) = (p_i0 - Y_i/q_i) e^{-t} + Y_i/q_i``."""
    e = params.E_tilde
    decay = math.exp(-t)
    return PriceState((prices0.p1 - e.p1) * decay + e.p1, (prices0.p2 - e.p2) * decay + e.p2)
