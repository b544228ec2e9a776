# -*- coding: utf-8 -*-
"""
Name: runtime.py
Last Updated: 10/18/2026

Closed-loop execution of a plan: a single-integrator system, grid-based
reach/hold controllers certified against the label regions, event schedules,
the simulation loop with replanning, trace recording and trace verification.
"""
import logging
import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
import pandas as pd
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from riskplan.errors import (ControllerMiss, AssumptionViolated, SpecFileError, UnknownSymbol, InputError)
from riskplan import formula as fm
from riskplan import risk
from riskplan.feasibility import cubeText
from riskplan.transducer import ClockAtom

logger = logging.getLogger(__name__)

REACH_AT_EXACTLY = 'ReachAtExactly'
REACH_AFTER_OPEN = 'ReachAfterOpen'
CONTROL_CLOCK = 'ctrl'
LABEL_TOLERANCE = 1e-9


#%% Dynamics
@dataclass(frozen=True)
class SingleIntegrator:
    '''x' = u with |u| <= vmax, integrated by explicit Euler steps of at most dt.'''
    n: int
    vmax: float
    dt: Fraction = Fraction(1, 100)

    def __post_init__(self):
        ##
        # Error Handling
        ##
        if self.n < 1:
            raise InputError("the system needs at least one dimension")
        if self.vmax <= 0:
            raise InputError("vmax must be positive, got {}".format(self.vmax))
        object.__setattr__(self, 'dt', fm.toRational(self.dt))
        if self.dt <= 0:
            raise InputError("the integration step must be positive")

    def clip(self, u):
        speed = float(np.linalg.norm(u))
        if speed > self.vmax:
            return u * (self.vmax / speed)
        return u

    def step(self, x, u, h):
        return x + float(h) * self.clip(np.asarray(u, dtype=float))


#%% Motions
class Motion(object):
    '''Constant-speed traversal of a polyline, arriving at its last point at `end`.'''

    def __init__(self, points, start, end = None, speed = None):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        steps = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        self.cumulative = np.concatenate([[0.0], np.cumsum(steps)])
        self.length = float(self.cumulative[-1])
        self.start = fm.toRational(start)
        if end is None:
            duration = self.length / speed if speed and self.length > 0 else 0.0
            end = self.start + fm.toRational(round(duration, 9)) if duration else self.start
        self.end = fm.toRational(end)

    @property
    def speed(self):
        span = float(self.end - self.start)
        return self.length / span if span > 0 else 0.0

    def position(self, t):
        if self.length == 0 or t >= self.end:
            return self.points[-1].copy()
        if t <= self.start:
            return self.points[0].copy()
        s = self.length * float((t - self.start) / (self.end - self.start))
        k = int(np.searchsorted(self.cumulative, s, side='right')) - 1
        k = min(k, len(self.points) - 2)
        piece = self.cumulative[k + 1] - self.cumulative[k]
        frac = 0.0 if piece == 0 else (s - self.cumulative[k]) / piece
        return self.points[k] + frac * (self.points[k + 1] - self.points[k])


#%% Grid path planning
@dataclass
class RouteTable:
    '''Shortest distances from every grid node to a crossing into the target label.'''
    source: frozenset
    target: frozenset
    kind: str
    dist: np.ndarray
    nextHop: np.ndarray
    crossing: dict


class GridPlanner(object):
    '''
    Parameters
    ----------------
     oracle - (FeasibilityOracle) evaluates label membership of points
     resolution - (int) grid points per workspace axis
     substeps - (int) interior points checked on every grid edge
    '''

    def __init__(self, oracle, resolution = 41, substeps = 8):
        ws = oracle.ws
        self.oracle = oracle
        self.resolution = resolution
        self.dim = ws.dim
        axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(ws.lo, ws.hi)]
        mesh = np.meshgrid(*axes, indexing='ij')
        self.nodes = np.stack([m.reshape(-1) for m in mesh], axis=1)
        self.cell = (ws.hi - ws.lo) / (resolution - 1)
        self.lo = ws.lo
        shape = (resolution,) * self.dim
        index = np.indices(shape).reshape(self.dim, -1).T
        src, dst = [], []
        for offset in product((-1, 0, 1), repeat=self.dim):
            if not any(offset):
                continue
            moved = index + np.array(offset)
            ok = np.all((moved >= 0) & (moved < resolution), axis=1)
            src.append(np.nonzero(ok)[0])
            dst.append(np.ravel_multi_index(moved[ok].T, shape))
        self.src = np.concatenate(src)
        self.dst = np.concatenate(dst)
        self.lengths = np.linalg.norm(self.nodes[self.dst] - self.nodes[self.src], axis=1)
        self.fractions = np.linspace(0.0, 1.0, substeps + 2)[1:]
        self.shape = shape
        self.offsets = np.array(list(product((-1, 0, 1, 2), repeat=self.dim)))

    def inside(self, label, points):
        return self.oracle.satisfiesAt(label, points)

    def segmentsInside(self, label, a, b):
        '''For each row, whether the points of a->b after a satisfy the label.'''
        if len(a) == 0:
            return np.zeros(0, dtype=bool)
        pts = a[:, None, :] + self.fractions[None, :, None] * (b - a)[:, None, :]
        mask = self.inside(label, pts.reshape(-1, self.dim))
        return mask.reshape(len(a), len(self.fractions)).all(axis=1)

    def crossings(self, source, target, kind, a, b):
        '''
        Boundary points on the segments a->b leaving the source label into the target label.
        Returns (valid mask, points); the point is the last source point for ReachAfterOpen and
        the first target point for ReachAtExactly.
        '''
        n = len(a)
        if n == 0:
            return np.zeros(0, dtype=bool), np.zeros((0, self.dim))
        lo = np.zeros(n)
        hi = np.ones(n)
        span = np.linalg.norm(b - a, axis=1)
        for _ in range(64):
            if np.all((hi - lo) * span <= 1e-12):
                break
            mid = (lo + hi) / 2
            ins = self.inside(source, a + mid[:, None] * (b - a))
            lo = np.where(ins, mid, lo)
            hi = np.where(ins, hi, mid)
        loPts = a + lo[:, None] * (b - a)
        hiPts = a + hi[:, None] * (b - a)
        valid = self.inside(source, loPts) & self.inside(target, hiPts) & self.inside(target, b)
        fr = self.fractions[None, :]
        pts = a[:, None, :] + fr[..., None] * (b - a)[:, None, :]
        flat = pts.reshape(-1, self.dim)
        inS = self.inside(source, flat).reshape(n, -1)
        inT = self.inside(target, flat).reshape(n, -1)
        before = fr < lo[:, None]
        after = fr > hi[:, None]
        valid &= np.all(~before | inS, axis=1) & np.all(~after | inT, axis=1)
        points = loPts if kind == REACH_AFTER_OPEN else hiPts
        return valid, points

    def route(self, source, target, kind):
        '''RouteTable toward the target label through the source label, or None when none exists.'''
        inS = self.inside(source, self.nodes)
        inT = self.inside(target, self.nodes)
        if not inS.any() or not inT.any():
            return None
        N = len(self.nodes)
        m = inS[self.src] & inS[self.dst]
        a, b = self.src[m], self.dst[m]
        ok = self.segmentsInside(source, self.nodes[a], self.nodes[b])
        rows = list(b[ok])
        cols = list(a[ok])
        data = list(self.lengths[m][ok])
        c = inS[self.src] & inT[self.dst]
        u, w = self.src[c], self.dst[c]
        valid, points = self.crossings(source, target, kind, self.nodes[u], self.nodes[w])
        crossing = {}
        for node, point in zip(u[valid], points[valid]):
            d = float(np.linalg.norm(point - self.nodes[node]))
            if node not in crossing or d < crossing[node][0]:
                crossing[node] = (d, point)
        if not crossing:
            return None
        for node, (d, point) in crossing.items():
            rows.append(N)
            cols.append(node)
            data.append(max(d, 1e-12))
        # reversed graph: edges point from the target super node back toward the nodes
        graph = csr_matrix((data, (rows, cols)), shape=(N + 1, N + 1))
        dist, pred = dijkstra(graph, directed=True, indices=N, return_predecessors=True)
        return RouteTable(source, target, kind, dist[:N], pred[:N], {k: v[1] for k, v in crossing.items()})

    def nearby(self, xs):
        '''Indices of the grid nodes around every point, -1 where off the grid.'''
        xs = np.atleast_2d(xs)
        base = np.floor((xs - self.lo) / self.cell).astype(int)
        cand = base[:, None, :] + self.offsets[None, :, :]
        ok = np.all((cand >= 0) & (cand < self.resolution), axis=2)
        clipped = np.clip(cand, 0, self.resolution - 1)
        flat = np.ravel_multi_index(tuple(np.moveaxis(clipped, 2, 0)), self.shape)
        return np.where(ok, flat, -1)

    def reach(self, table, xs):
        '''
        Per point, the length of the shortest route to the target and its first hop:
        a node index, or -1 for a direct crossing.
        '''
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        cand = self.nearby(xs)
        S, C = cand.shape
        reps = np.repeat(xs, C, axis=0)
        flat = cand.reshape(-1)
        nodes = self.nodes[np.maximum(flat, 0)]
        direct = [None] * S
        # through a grid node
        finite = (flat >= 0) & np.isfinite(table.dist[np.maximum(flat, 0)])
        idx = np.nonzero(finite)[0]
        ok = np.zeros(len(flat), dtype=bool)
        ok[idx] = self.segmentsInside(table.source, reps[idx], nodes[idx])
        lengths = np.where(ok, np.linalg.norm(nodes - reps, axis=1) + table.dist[np.maximum(flat, 0)], np.inf)
        lengths = lengths.reshape(S, C)
        pick = np.argmin(lengths, axis=1)
        best = lengths[np.arange(S), pick]
        first = np.where(np.isfinite(best), cand[np.arange(S), pick], -2)
        # straight into the target
        inT = np.zeros(len(flat), dtype=bool)
        inT[flat >= 0] = self.inside(table.target, nodes[flat >= 0])
        idx = np.nonzero(inT)[0]
        valid, points = self.crossings(table.source, table.target, table.kind, reps[idx], nodes[idx])
        for j, v, p in zip(idx, valid, points):
            if not v:
                continue
            s = j // C
            d = float(np.linalg.norm(p - xs[s]))
            if d < best[s]:
                best[s] = d
                first[s] = -1
                direct[s] = p
        return best, first, direct

    def path(self, table, x):
        '''Polyline from x to the crossing point of the route table.'''
        best, first, direct = self.reach(table, x)
        if not np.isfinite(best[0]):
            return None
        points = [np.asarray(x, dtype=float).reshape(-1)]
        if first[0] == -1:
            points.append(direct[0])
            return np.array(points)
        node = int(first[0])
        N = len(self.nodes)
        while node != N and node >= 0:
            points.append(self.nodes[node])
            nxt = int(table.nextHop[node])
            if nxt == N:
                points.append(table.crossing[node])
                break
            node = nxt
        return np.array(points)

    def holdPath(self, label, x):
        '''Polyline from x to the reachable grid node of the label with the largest margin.'''
        inL = self.inside(label, self.nodes)
        x = np.asarray(x, dtype=float).reshape(-1)
        if not inL.any():
            return None
        N = len(self.nodes)
        m = inL[self.src] & inL[self.dst]
        a, b = self.src[m], self.dst[m]
        ok = self.segmentsInside(label, self.nodes[a], self.nodes[b])
        rows, cols, data = list(a[ok]), list(b[ok]), list(self.lengths[m][ok])
        cand = [c for c in self.nearby(x)[0] if c >= 0 and inL[c]]
        if cand:
            seg = self.segmentsInside(label, np.repeat(x[None, :], len(cand), axis=0), self.nodes[cand])
            for c, good in zip(cand, seg):
                if good:
                    rows.append(N)
                    cols.append(c)
                    data.append(max(float(np.linalg.norm(self.nodes[c] - x)), 1e-12))
        if not any(r == N for r in rows):
            return np.array([x])
        graph = csr_matrix((data, (rows, cols)), shape=(N + 1, N + 1))
        dist, pred = dijkstra(graph, directed=True, indices=N, return_predecessors=True)
        margins = self.labelMargin(label, self.nodes)
        score = np.where(np.isfinite(dist[:N]), margins, -np.inf)
        goal = int(np.argmax(score))
        chain = []
        node = goal
        while node != N and node >= 0:
            chain.append(self.nodes[node])
            node = int(pred[node])
        return np.array([x] + chain[::-1])

    def labelMargin(self, label, points):
        names = [n for n, v in self.oracle.predicatePart(label)]
        if not names:
            return np.zeros(len(points))
        values = self.oracle.values(points, names)
        signed = [values[n] if v else -values[n] for n, v in self.oracle.predicatePart(label)]
        return np.min(np.vstack(signed), axis=0)


#%% Controllers
@dataclass
class TransitionController:
    '''
    Moves from anywhere in the source label region to the boundary of the target label
    region, arriving exactly at the end of its window while staying in the source region.
    '''
    source: frozenset
    target: frozenset
    kind: str
    minDuration: Fraction
    maxLength: float
    route: RouteTable = field(repr=False, default=None)
    planner: GridPlanner = field(repr=False, default=None)

    def motion(self, x, start, end):
        points = self.planner.path(self.route, x)
        if points is None:
            raise ControllerMiss("no route from {} toward {}".format(np.round(x, 6), cubeText(self.target)))
        return Motion(points, start, end)


@dataclass
class HoldController:
    '''Keeps the state inside one label region, parked at its most interior grid node.'''
    label: frozenset
    vmax: float
    planner: GridPlanner = field(repr=False, default=None)

    def motion(self, x, start, end = None):
        points = self.planner.holdPath(self.label, x)
        if points is None:
            raise ControllerMiss("label region {} is empty".format(cubeText(self.label)))
        return Motion(points, start, speed=self.vmax)


class ControllerLibrary(object):
    '''
    Certified controllers per ordered label pair for a single integrator.

    Parameters
    ----------------
     oracle - (FeasibilityOracle)
     vmax - (float) speed bound of the system
     guardLower - (rational) every controller accepts any duration above this bound
     resolution - (int) grid points per axis of the path planner
     samples - (int) source points checked by certification
     seed - (int) seed of those points
    '''

    def __init__(self, oracle, vmax, guardLower = 1, resolution = 41, samples = 1000, seed = 0):
        self.oracle = oracle
        self.vmax = float(vmax)
        self.guardLower = fm.toRational(guardLower)
        self.samples = samples
        self.seed = seed
        self.planner = GridPlanner(oracle, resolution)
        self._certified = {}

    @property
    def guard(self):
        '''The guard on the control clock: strictly more than guardLower time units.'''
        return (ClockAtom(CONTROL_CLOCK, '>', self.guardLower),)

    def _sourcePoints(self, label):
        rng = np.random.default_rng(self.seed)
        ws = self.oracle.ws
        found = []
        count = 0
        for _ in range(50):
            pts = ws.lo + rng.random((self.samples, ws.dim)) * (ws.hi - ws.lo)
            pts = pts[self.oracle.satisfiesAt(label, pts)]
            found.append(pts)
            count += len(pts)
            if count >= self.samples:
                break
        grid = self.planner.nodes[self.planner.inside(label, self.planner.nodes)]
        found.append(grid)
        points = np.vstack(found)
        return points[:self.samples + len(grid)]

    def certify(self, source, target, kind):
        '''
        Parameters
        ----------------
         source, target - (frozenset) predicate label cubes
         kind - (str) REACH_AT_EXACTLY or REACH_AFTER_OPEN

        Returns
        ----------------
         TransitionController, or None when some sampled source point cannot reach the
         target within guardLower time units at speed vmax
        '''
        key = (source, target, kind)
        if key in self._certified:
            return self._certified[key]
        controller = None
        reason = None
        table = None
        if not self.oracle.existsX(target) or not self.oracle.existsX(source):
            reason = 'empty label region'
        else:
            table = self.planner.route(source, target, kind)
            if table is None:
                reason = 'no boundary between the label regions'
        if table is not None:
            points = self._sourcePoints(source)
            if len(points) == 0:
                reason = 'no sampled point in the source region'
            else:
                best, first, direct = self.planner.reach(table, points)
                worst = float(np.max(best))
                if not np.isfinite(worst):
                    reason = 'unreachable sample {}'.format(np.round(points[int(np.argmax(best))], 4).tolist())
                elif worst / self.vmax > float(self.guardLower):
                    reason = 'route length {:.3f} needs more than {} time units'.format(worst, self.guardLower)
                else:
                    controller = TransitionController(source, target, kind, self.guardLower, worst, table, self.planner)
        logger.debug("controller certification", extra={'event': 'certify', 'source': cubeText(source),
                                                         'target': cubeText(target), 'kind': kind,
                                                         'certified': controller is not None, 'reason': reason})
        self._certified[key] = controller
        return controller

    def hold(self, label):
        return HoldController(label, self.vmax, self.planner)


#%% Events
@dataclass
class EventSchedule:
    '''Instants at which some uncontrollable propositions are true; s is bottom elsewhere.'''
    events: list = field(default_factory=list)

    @classmethod
    def parse(cls, lines, uncontrollables = None):
        '''Lines "t symbol" with rational t; several symbols at one instant form one event.'''
        merged = {}
        for number, line in enumerate(lines, 1):
            text = line.split('#', 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            ##
            # Error Handling
            ##
            if len(parts) != 2:
                raise SpecFileError("events line {}: expected 't symbol', got '{}'".format(number, line.strip()))
            try:
                t = fm.toRational(parts[0])
            except InputError:
                raise SpecFileError("events line {}: '{}' is not a rational time".format(number, parts[0]))
            if uncontrollables is not None and parts[1] not in uncontrollables:
                raise UnknownSymbol("events line {}: '{}' is not an uncontrollable proposition".format(number, parts[1]))
            if t <= 0:
                raise SpecFileError("events line {}: events happen after time 0".format(number))
            merged.setdefault(t, set()).add(parts[1])
        return cls([(t, frozenset(merged[t])) for t in sorted(merged)])

    @classmethod
    def load(cls, path, uncontrollables = None):
        if path == '-':
            return cls.parse(sys.stdin.readlines(), uncontrollables)
        try:
            with open(path) as handle:
                return cls.parse(handle.readlines(), uncontrollables)
        except OSError as err:
            raise SpecFileError("cannot read events file {}: {}".format(path, err))

    def validate(self, zeta):
        '''Raises AssumptionViolated naming the first pair of events closer than zeta.'''
        if zeta is None:
            return self
        zeta = fm.toRational(zeta)
        for (t1, s1), (t2, s2) in zip(self.events, self.events[1:]):
            if t2 - t1 < zeta:
                raise AssumptionViolated("events at {} and {} are closer than zeta={}".format(
                    fm.rationalText(t1), fm.rationalText(t2), fm.rationalText(zeta)), [t1, t2])
        return self

    def times(self):
        return [t for t, s in self.events]

    def at(self, t):
        for te, s in self.events:
            if te == t:
                return s
        return None


class LineInjector(object):
    '''
    Event hook for simulate reading "t symbol" lines from a stream while the run goes on.
    A line is read only once the previous one has fired, and fires at the first step at or
    after its time; the end of the stream ends the injections.
    '''

    def __init__(self, stream, uncontrollables = None):
        self.stream = stream
        self.uncontrollables = uncontrollables
        self.waiting = None
        self.closed = False

    def _pull(self):
        while self.waiting is None and not self.closed:
            line = self.stream.readline()
            if not line:
                self.closed = True
                break
            parsed = EventSchedule.parse([line], self.uncontrollables).events
            if parsed:
                self.waiting = parsed[0]

    def __call__(self, t):
        fired = set()
        self._pull()
        while self.waiting is not None and self.waiting[0] <= t:
            fired |= self.waiting[1]
            self.waiting = None
            self._pull()
        if fired:
            logger.info("event read", extra={'event': 'inject', 'time': str(t), 'symbols': sorted(fired)})
        return frozenset(fired) or None


#%% Traces
@dataclass
class Trace:
    '''
    Sampled execution: one row per integration step and per exact plan instant,
    with the checked Boolean abstraction and the lasso of the final plan.
    '''
    frame: pd.DataFrame
    lasso: tuple
    symbols: list
    uncontrollables: list

    def toFrame(self):
        return self.frame.copy()

    def toCsv(self, path):
        '''Writes the lasso header and the rows to a path or an open text handle.'''
        if hasattr(path, 'write'):
            self._write(path)
            return
        with open(path, 'w') as handle:
            self._write(handle)

    def _write(self, handle):
        handle.write('# lasso_start={} period={}\n'.format(fm.rationalText(self.lasso[0]), fm.rationalText(self.lasso[1])))
        self.frame.to_csv(handle, index=False)

    @classmethod
    def fromCsv(cls, path, symbols, uncontrollables):
        try:
            with open(path) as handle:
                header = handle.readline()
                frame = pd.read_csv(handle, dtype={'t_exact': str})
        except OSError as err:
            raise SpecFileError("cannot read trace {}: {}".format(path, err))
        ##
        # Error Handling
        ##
        if not header.startswith('# lasso_start='):
            raise SpecFileError("trace {} lacks its lasso header".format(path))
        fields = dict(part.split('=') for part in header[1:].split())
        missing = [c for c in ['t_exact', 'point'] + list(symbols) + list(uncontrollables) if c not in frame.columns]
        if missing:
            raise SpecFileError("trace {} lacks the columns {}".format(path, ', '.join(missing)))
        return cls(frame, (fm.toRational(fields['lasso_start']), fm.toRational(fields['period'])), list(symbols),
                   list(uncontrollables))

    def positionAt(self, t):
        times = self.frame['t'].to_numpy()
        k = int(np.argmin(np.abs(times - float(t))))
        return self.frame.loc[k, [c for c in self.frame.columns if re.match(r'^x\d+$', c)]].to_numpy(dtype=float)

    def toSignal(self, table):
        '''Boolean lasso signal over the abstract propositions of the table's symbols.'''
        start, period = self.lasso
        horizon = start + period
        exact = [fm.toRational(v) for v in self.frame['t_exact']]
        names = list(self.symbols) + list(self.uncontrollables)
        props = {name: table.propOf(name) if name in table else name for name in names}
        breakpoints, points, intervals = [], [], []
        rows = self.frame.to_dict('records')
        for k, row in enumerate(rows):
            t = exact[k]
            if t > horizon:
                break
            if bool(row['point']) and (not breakpoints or t > breakpoints[-1]):
                breakpoints.append(t)
                points.append({props[n]: bool(row[n]) for n in names})
                after = next((r for j, r in enumerate(rows[k + 1:], k + 1) if not bool(r['point'])), None)
                if after is None:
                    after = row
                intervals.append({props[n]: bool(after[n]) if n in self.symbols else False for n in names})
        ##
        # Error Handling
        ##
        if not breakpoints or breakpoints[-1] != horizon:
            raise SpecFileError("trace does not reach the end of its lasso at {}".format(fm.rationalText(horizon)))
        return fm.BooleanSignal(breakpoints, points[:-1], intervals[:-1], (start, period))


#%% Simulation
def _abstraction(oracle, x, expected, tolerance = LABEL_TOLERANCE):
    '''Predicate truths at x; margins within tolerance take the expected value.'''
    margins = oracle.values(x)
    expect = dict(expected)
    observed = {}
    for name, m in margins.items():
        value = float(m[0])
        if abs(value) <= tolerance and name in expect:
            observed[name] = expect[name]
        else:
            observed[name] = value >= 0
    return observed


def simulate(schedule, plan, events, system, oracle, table, x0, replanner = None, periods = 2, hook = None,
             zeta = None):
    '''
    Parameters
    ----------------
     schedule - control schedule of the plan (windowAt(t) -> window with start, end and controller)
     plan - the plan being executed
     events - (EventSchedule) validated event instants, may be empty
     system - (SingleIntegrator)
     oracle - (FeasibilityOracle) label evaluation
     table - (SymbolTable) deterministic table naming the predicate columns
     x0 - (array) initial state
     replanner - callable(plan, t, s) -> (plan, schedule), invoked at every event
     periods - (int) lasso periods simulated after the plan's prefix
     hook - callable(t) -> frozenset or None polled at every step for injected events
     zeta - (rational) minimal event separation enforced on injected events

    Returns
    ----------------
     (Trace, the plan in force at the end of the run)
    '''
    ucs = sorted(oracle.uncontrollables)
    symbols = [table.symbolOf(p) for p in sorted(oracle.predicates)]
    x = np.asarray(x0, dtype=float).reshape(-1)
    ##
    # Error Handling
    ##
    if len(x) != system.n:
        raise InputError("x0 has {} entries, the system {}".format(len(x), system.n))
    if events.events and replanner is None:
        raise InputError("events need a replanner")

    pending = list(events.events)
    lastEvent = None
    t = Fraction(0)
    window = None
    motion = None
    rows = []
    horizon = plan.horizon(periods)
    marks = set(plan.breakpoints(horizon))
    while True:
        s = frozenset()
        if pending and pending[0][0] == t:
            s = pending.pop(0)[1]
        elif hook is not None:
            injected = hook(t)
            if injected:
                if zeta is not None and lastEvent is not None and t - lastEvent < fm.toRational(zeta):
                    logger.warning("injected event rejected", extra={'event': 'inject', 'time': str(t),
                                                                     'reason': 'closer than zeta to the last event'})
                    raise AssumptionViolated("event injected at {} is closer than zeta={} to the one at {}".format(
                        fm.rationalText(t), fm.rationalText(fm.toRational(zeta)), fm.rationalText(lastEvent)),
                        [lastEvent, t])
                s = frozenset(injected)
        if s:
            lastEvent = t
            plan, schedule = replanner(plan, t, s)
            horizon = plan.horizon(periods)
            marks = {m for m in marks if m < t} | set(plan.breakpoints(horizon))
            window = None
            logger.info("event handled", extra={'event': 'replan', 'time': str(t), 'symbols': sorted(s)})
        if window is None or (window.end is not None and t >= window.end):
            window = schedule.windowAt(t)
            motion = window.controller.motion(x, t, window.end)
        isPoint = t in marks
        expected = plan.labelAt(t, isPoint)
        observed = _abstraction(oracle, x, expected)
        for name, value in expected:
            if name in observed and observed[name] != value:
                raise ControllerMiss("at t={} the state {} gives {}={} but the plan expects {}".format(
                    fm.rationalText(t), np.round(x, 6).tolist(), table.symbolOf(name), observed[name], value))
        if not oracle.ws.contains(x, 1e-9)[0]:
            raise ControllerMiss("state {} left the workspace at t={}".format(np.round(x, 6).tolist(), t))
        row = {'t': float(t), 't_exact': fm.rationalText(t)}
        row.update({'x{}'.format(i + 1): float(v) for i, v in enumerate(x)})
        row.update({u: bool(u in s) for u in ucs})
        row.update({table.symbolOf(p): bool(observed[p]) for p in sorted(oracle.predicates)})
        row.update({'segment': plan.segmentIndex(t), 'window': window.index, 'point': isPoint})
        rows.append(row)
        if t >= horizon:
            break
        following = [m for m in marks if m > t]
        candidates = [system.dt * (math.floor(t / system.dt) + 1), horizon]
        if following:
            nxt = min(following)
            candidates.append(nxt)
            previous = max([m for m in marks if m <= t], default=Fraction(0))
            if previous <= t < (previous + nxt) / 2:
                candidates.append((previous + nxt) / 2)
        if pending:
            candidates.append(pending[0][0])
        if window.end is not None and window.end > t:
            candidates.append(window.end)
        tNext = min(c for c in candidates if c > t)
        h = tNext - t
        u = (motion.position(tNext) - x) / float(h)
        x = system.step(x, u, h)
        t = tNext
    frame = pd.DataFrame(rows)
    trace = Trace(frame, plan.signalLasso, symbols, ucs)
    logger.info("simulation finished", extra={'event': 'simulate', 'rows': len(frame), 'horizon': str(horizon),
                                              'events': int(frame[ucs].any(axis=1).sum()) if ucs else 0})
    return trace, plan


#%% Verification
@dataclass
class VerifyReport:
    thetaHolds: bool
    failing: list
    risk: pd.DataFrame

    @property
    def ok(self):
        return bool(self.thetaHolds and (self.risk.empty or self.risk['ok'].all()))

    def toDict(self):
        return {'theta': self.thetaHolds, 'failing': self.failing, 'risk_ok': bool(self.risk.empty or self.risk['ok'].all()),
                'ok': self.ok, 'risk': self.risk.to_dict('records')}


def _conjuncts(f):
    if isinstance(f, fm.And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def verifyTrace(trace, theta, detTable, riskTable, X, method = None):
    '''
    Parameters
    ----------------
     trace - (Trace)
     theta - (Formula) deterministic formula over abstract propositions
     detTable - (SymbolTable) deterministic predicates, names the trace columns
     riskTable - (SymbolTable) the original risk predicates
     X - (GaussianVector)
     method - (MonteCarlo) sampling configuration of the risk check

    Returns
    ----------------
     VerifyReport with the monitor verdict, the falsified top-level obligations and one
     risk row per asserted risk predicate and open segment
    '''
    method = method or risk.MonteCarlo()
    signal = trace.toSignal(detTable)
    holds = fm.evaluate(theta, signal, 0)
    failing = [fm.toText(fm.concretize(c, detTable)) for c in _conjuncts(theta) if not fm.evaluate(c, signal, 0)]
    draws = risk._draws(X, method)
    rows = []
    cache = {}
    for start, end, isPoint, values in signal.segments():
        if isPoint:
            continue
        middle = (start + end) / 2
        x = trace.positionAt(middle)
        for prop, value in values.items():
            if not value or not detTable.isPredicateProp(prop):
                continue
            symbol = detTable.symbolOf(prop)
            negated = symbol.endswith('_neg') and symbol[:-4] in riskTable
            base = symbol[:-4] if negated else symbol
            if base not in riskTable or riskTable.kindOf(base) != riskTable.RISK:
                continue
            pred = riskTable.payloadOf(base)
            key = (base, tuple(np.round(x, 12)))
            if key not in cache:
                cache[key] = risk.riskEstimate(pred.h, x, X, pred.spec, method, draws)
            r, se = cache[key]
            ok = (r > pred.spec.gamma - 3 * se) if negated else (r <= pred.spec.gamma + 3 * se)
            rows.append({'t': float(middle), 'symbol': symbol, 'negated': negated, 'risk': r, 'se': se,
                         'gamma': pred.spec.gamma, 'ok': bool(ok)})
    frame = pd.DataFrame(rows, columns=['t', 'symbol', 'negated', 'risk', 'se', 'gamma', 'ok'])
    report = VerifyReport(bool(holds), failing, frame)
    logger.info("trace verified", extra={'event': 'verify', 'theta': report.thetaHolds, 'ok': report.ok,
                                         'failing': failing})
    return report
