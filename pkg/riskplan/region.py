# -*- coding: utf-8 -*-
"""
Name: region.py
Last Updated: 10/18/2026

Clock regions of a transducer, the region automaton with separated time and
discrete edges, Buchi degeneralization, accepting-lasso search and the
extraction of concrete rational timings for a region path.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np
from scipy.optimize import linprog

from riskplan.errors import RegionBoundExceeded, UnrealizablePath, InputError
from riskplan import formula as fm
from riskplan.transducer import INIT, Tst, StateInfo, Transition, ClockAtom, synchronousProduct, stateKey
from riskplan.feasibility import makeCube

logger = logging.getLogger(__name__)

TIME = 'time'
DISCRETE = 'discrete'


#%% Regions
class RegionSpace(object):
    '''
    Region arithmetic for a fixed list of clocks.
    A region is (ints, frac): ints[i] is the integer part of clock i or None once
    the clock exceeds its largest constant; frac lists the remaining clocks grouped
    by equal fractional part in increasing order, frac[0] being the (possibly empty)
    group with fractional part zero. All constants are scaled to integers first.

    Parameters
    ----------------
     clocks - (tuple) clock names
     constants - (dict) clock -> largest rational constant
     active - (dict or None) location -> set of clock indices that may be read before their next reset
     scale - (int or None) common denominator of every constant compared against, not only the largest ones
    '''

    def __init__(self, clocks, constants, active = None, scale = None):
        self.clocks = tuple(clocks)
        self.position = {c: i for i, c in enumerate(self.clocks)}
        consts = [fm.toRational(constants.get(c, 0)) for c in self.clocks]
        self.scale = reduce(lambda a, b: a * b // math.gcd(a, b), [c.denominator for c in consts], scale or 1)
        self.bounds = tuple(int(c * self.scale) for c in consts)
        self.active = active

    def scaled(self, value):
        return fm.toRational(value) * self.scale

    def initial(self):
        n = len(self.clocks)
        return (tuple([0] * n), (tuple(range(n)),))

    def isPoint(self, region):
        return bool(region[1][0])

    def successor(self, region):
        '''The immediate time successor.'''
        ints, frac = region
        zero, rest = frac[0], frac[1:]
        if zero:
            newInts = list(ints)
            moving = []
            for c in zero:
                if ints[c] >= self.bounds[c]:
                    newInts[c] = None
                else:
                    moving.append(c)
            return (tuple(newInts), ((),) + ((tuple(moving),) if moving else ()) + rest)
        if not rest:
            return region
        last = rest[-1]
        newInts = list(ints)
        for c in last:
            newInts[c] = ints[c] + 1
        return (tuple(newInts), (last,) + rest[:-1])

    def _without(self, frac, clocks):
        groups = [tuple(c for c in g if c not in clocks) for g in frac]
        return (groups[0],) + tuple(g for g in groups[1:] if g)

    def reset(self, region, clocks):
        idx = {self.position[c] for c in clocks}
        if not idx:
            return region
        ints = tuple(0 if i in idx else v for i, v in enumerate(region[0]))
        frac = self._without(region[1], idx)
        return (ints, (tuple(sorted(frac[0] + tuple(idx))),) + frac[1:])

    def saturate(self, region, indices):
        idx = {i for i in indices if region[0][i] is not None}
        if not idx:
            return region
        ints = tuple(None if i in idx else v for i, v in enumerate(region[0]))
        return (ints, self._without(region[1], idx))

    def reduce(self, region, location):
        if self.active is None:
            return region
        live = self.active.get(location, ())
        return self.saturate(region, [i for i in range(len(self.clocks)) if i not in live])

    def satisfies(self, region, atoms):
        for a in atoms:
            c = self.position[a.clock]
            k = a.const * self.scale
            v = region[0][c]
            if v is None:
                ok = a.op in ('>', '>=')
            elif c in region[1][0]:
                ok = {'<': v < k, '<=': v <= k, '==': v == k, '>=': v >= k, '>': v > k}[a.op]
            else:
                ok = {'<': v + 1 <= k, '<=': v + 1 <= k, '==': False, '>=': v >= k, '>': v >= k}[a.op]
            if not ok:
                return False
        return True

    def regionOf(self, values, free = ()):
        '''Region of a valuation given in original time units; clocks in free are saturated.'''
        ints = []
        fracs = {}
        for i, c in enumerate(self.clocks):
            v = self.scaled(values[c]) if c not in free else None
            if v is None or v > self.bounds[i]:
                ints.append(None)
                continue
            whole = math.floor(v)
            ints.append(whole)
            fracs.setdefault(v - whole, []).append(i)
        zero = tuple(fracs.pop(Fraction(0), []))
        return (tuple(ints), (zero,) + tuple(tuple(fracs[f]) for f in sorted(fracs)))

    def alurDillBound(self):
        n = len(self.clocks)
        return math.factorial(n) * 2 ** n * math.prod(2 * k + 2 for k in self.bounds)

    def text(self, region):
        ints, frac = region
        parts = []
        for i, c in enumerate(self.clocks):
            v = ints[i]
            if v is None:
                parts.append('{}>{}'.format(c, fm.rationalText(Fraction(self.bounds[i], self.scale))))
            elif i in frac[0]:
                parts.append('{}={}'.format(c, fm.rationalText(Fraction(v, self.scale))))
            else:
                parts.append('{}~{}'.format(c, fm.rationalText(Fraction(v, self.scale))))
        order = ' < '.join(','.join(self.clocks[i] for i in g) for g in frac[1:])
        return '{} [{}]'.format(' '.join(parts), order)


def activeClocks(tst):
    '''Per location, the indices of the clocks that may be read before their next reset.'''
    position = {c: i for i, c in enumerate(tst.clocks)}
    locations = [INIT] + list(tst.states)
    active = {s: {position[a.clock] for a in tst.states[s].invariant} if s != INIT else set() for s in locations}
    changed = True
    while changed:
        changed = False
        for t in tst.transitions:
            reads = {position[a.clock] for a in t.guard}
            reads |= active[t.dst] - {position[c] for c in t.resets}
            if not reads <= active[t.src]:
                active[t.src] |= reads
                changed = True
    return {s: frozenset(v) for s, v in active.items()}


#%% Region automaton
class RegionAutomaton(object):
    '''
    Reachable region automaton with separated transitions. A state is
    (location, region, phase); phase 1 marks the instant right after a discrete
    step, from which only time may pass.
    '''

    def __init__(self, tst, space):
        self.tst = tst
        self.space = space
        self.states = []
        self.index = {}
        self.edges = []
        self.acceptance = []
        self.initial = 0

    def add(self, state):
        if state not in self.index:
            self.index[state] = len(self.states)
            self.states.append(state)
            self.edges.append([])
            return True
        return False

    def location(self, q):
        return self.states[q][0]

    def region(self, q):
        return self.states[q][1]

    def phase(self, q):
        return self.states[q][2]

    def __len__(self):
        return len(self.states)


def buildRAC(tst, maxStates = None):
    '''
    Parameters
    ----------------
     tst - (Tst) with finite clock constants
     maxStates - (int or None) abort with RegionBoundExceeded beyond this many states

    Returns
    ----------------
     RegionAutomaton restricted to what the initial state reaches
    '''
    space = RegionSpace(tst.clocks, tst.constants(), activeClocks(tst), tst.timeScale())
    ra = RegionAutomaton(tst, space)
    start = (INIT, space.initial(), 0)
    ra.add(start)
    cap = (len(tst.states) + 1) * 2 * space.alurDillBound()
    frontier = [start]
    while frontier:
        state = frontier.pop()
        q = ra.index[state]
        loc, region, phase = state
        targets = []
        if loc != INIT:
            nxt = region
            if phase == 0 or space.isPoint(region):
                nxt = space.successor(region)
            if space.satisfies(nxt, tst.states[loc].invariant):
                targets.append((TIME, None, (loc, nxt, 0)))
        if phase == 0:
            for t in tst.outgoing(loc):
                if not space.satisfies(region, t.guard):
                    continue
                after = space.reduce(space.reset(region, t.resets), t.dst)
                if space.satisfies(after, tst.states[t.dst].invariant):
                    targets.append((DISCRETE, t, (t.dst, after, 1)))
        for kind, t, target in targets:
            if ra.add(target):
                frontier.append(target)
            ra.edges[q].append((kind, t, ra.index[target]))
        ##
        # Error Handling
        ##
        if len(ra.states) > cap:
            raise RegionBoundExceeded("{} region states exceed the Alur-Dill bound {}".format(len(ra.states), cap))
        if maxStates is not None and len(ra.states) > maxStates:
            raise RegionBoundExceeded("region automaton of {} exceeds {} states".format(tst.name, maxStates))

    if tst.acceptance:
        ra.acceptance = [frozenset(q for q, s in enumerate(ra.states) if s[0] in a) for a in tst.acceptance]
    else:
        ra.acceptance = [frozenset(range(len(ra.states)))]
    logger.info("region automaton built", extra={'event': 'regions', 'states': len(ra.states),
                                                 'edges': sum(len(e) for e in ra.edges), 'clocks': len(tst.clocks),
                                                 'scale': space.scale})
    return ra


#%% Degeneralization
class DegeneralizedRA(object):
    '''Region automaton with a round-robin counter over its acceptance family and one accepting set.'''

    def __init__(self, ra, sets):
        self.ra = ra
        self.sets = sets
        self.states = []
        self.index = {}
        self.edges = []
        self.accepting = frozenset()
        self.initial = 0

    def add(self, state):
        if state not in self.index:
            self.index[state] = len(self.states)
            self.states.append(state)
            self.edges.append([])
            return True
        return False

    def raState(self, q):
        return self.states[q][0]

    def counter(self, q):
        return self.states[q][1]

    def location(self, q):
        return self.ra.location(self.states[q][0])

    def region(self, q):
        return self.ra.region(self.states[q][0])

    def phase(self, q):
        return self.ra.phase(self.states[q][0])

    @property
    def tst(self):
        return self.ra.tst

    @property
    def space(self):
        return self.ra.space

    def __len__(self):
        return len(self.states)


def nextCounter(i, n):
    '''Counter after leaving a state of the i-th acceptance set (1-based, cyclic).'''
    return (i % n) + 1


def degeneralize(ra):
    '''
    Q x {1..n} with the counter advancing cyclically whenever the current state lies in
    the set it waits for; accepting states are those of the first set with counter 1.
    '''
    n = len(ra.acceptance)
    ##
    # Error Handling
    ##
    if n < 1:
        raise InputError("degeneralization needs at least one acceptance set")

    dra = DegeneralizedRA(ra, n)
    start = (ra.initial, 1)
    dra.add(start)
    frontier = [start]
    while frontier:
        state = frontier.pop()
        q, i = state
        j = nextCounter(i, n) if q in ra.acceptance[i - 1] else i
        for kind, t, target in ra.edges[q]:
            nxt = (target, j)
            if dra.add(nxt):
                frontier.append(nxt)
            dra.edges[dra.index[state]].append((kind, t, dra.index[nxt]))
    dra.accepting = frozenset(k for k, (q, i) in enumerate(dra.states) if i == 1 and q in ra.acceptance[0])
    logger.info("automaton degeneralized", extra={'event': 'degeneralize', 'sets': n, 'states': len(dra.states)})
    return dra


#%% Lasso search
def nestedDfs(dra, start = None, allowed = None, edgeOk = None):
    '''
    Accepting lasso search.

    Parameters
    ----------------
     dra - (DegeneralizedRA)
     start - (int) state to search from, the initial state by default
     allowed - (set or None) states the lasso may visit
     edgeOk - (callable or None) edgeOk(q, k) filters the k-th edge of state q

    Returns
    ----------------
     (prefix, cycle) lists of (state, edge index), or None when no accepting lasso exists
    '''
    start = dra.initial if start is None else start
    if allowed is not None and start not in allowed:
        return None

    def successors(q):
        result = []
        for k, (kind, t, target) in enumerate(dra.edges[q]):
            if allowed is not None and target not in allowed:
                continue
            if edgeOk is not None and not edgeOk(q, k):
                continue
            result.append((k, target))
        return result

    innerSeen = set()

    def cycleThrough(seed):
        parent = {}
        stack = []
        for k, target in successors(seed):
            if target == seed:
                return [(seed, k)]
            if target not in innerSeen:
                innerSeen.add(target)
                parent[target] = (seed, k)
                stack.append(target)
        while stack:
            q = stack.pop()
            for k, target in successors(q):
                if target == seed:
                    cycle = [(q, k)]
                    while q != seed:
                        q, edge = parent[q]
                        cycle.append((q, edge))
                    return cycle[::-1]
                if target not in innerSeen:
                    innerSeen.add(target)
                    parent[target] = (q, k)
                    stack.append(target)
        return None

    outerSeen = {start}
    stack = [(start, iter(successors(start)))]
    path = []
    while stack:
        q, it = stack[-1]
        pushed = False
        for k, target in it:
            if target not in outerSeen:
                outerSeen.add(target)
                path.append((q, k))
                stack.append((target, iter(successors(target))))
                pushed = True
                break
        if pushed:
            continue
        stack.pop()
        if q in dra.accepting:
            cycle = cycleThrough(q)
            if cycle is not None:
                return list(path[:len(stack)]), cycle
        if path:
            path.pop()
    return None


#%% Timings
@dataclass
class TimedPath:
    '''
    A region path with concrete times: steps are (state, edge index, time the edge is taken,
    clock valuation before the edge); the cycle repeats every `period` from `loopStart`.
    '''
    prefix: list
    cycle: list
    period: Fraction
    loopStart: Fraction

    def discreteSteps(self, dra):
        for part in (self.prefix, self.cycle):
            for q, k, t, valuation in part:
                if dra.edges[q][k][0] == DISCRETE:
                    yield q, k, t, valuation

    def delays(self, dra):
        '''tau_0 = 0 followed by the delays between consecutive discrete steps.'''
        times = [t for q, k, t, v in self.discreteSteps(dra)]
        return [Fraction(0)] + [b - a for a, b in zip(times, times[1:])]

    def validate(self, dra):
        '''Replays the discrete steps on the transducer; raises UnrealizablePath on a violated guard.'''
        for q, k, t, valuation in self.discreteSteps(dra):
            transition = dra.edges[q][k][1]
            for atom in transition.guard:
                if not atom.holds(valuation[atom.clock]):
                    raise UnrealizablePath("guard {} fails at time {} with {}={}".format(
                        atom, t, atom.clock, valuation[atom.clock]))
        return True


class _Symbolic(object):
    '''Clock values as constant plus a sum of delay variables; None marks an irrelevant clock.'''

    def __init__(self, clocks, start):
        self.values = {c: None if start.get(c) is None else (fm.toRational(start[c]), frozenset()) for c in clocks}

    def elapse(self, var):
        self.values = {c: None if v is None else (v[0], v[1] | {var}) for c, v in self.values.items()}

    def reset(self, clocks):
        for c in clocks:
            self.values[c] = (Fraction(0), frozenset())

    def forget(self, clocks):
        for c in clocks:
            self.values[c] = None

    def snapshot(self):
        return dict(self.values)


def _regionRows(space, region, values):
    '''Linear rows (coeffs, const, op) asserting that the symbolic valuation lies in region.'''
    rows = []
    ints, frac = region

    def expr(c):
        const, vars = values[c]
        return {v: 1 for v in vars}, const * space.scale

    for i, c in enumerate(space.clocks):
        if values[c] is None:
            continue
        coeffs, const = expr(c)
        if ints[i] is None:
            rows.append(({v: -a for v, a in coeffs.items()}, const - space.bounds[i], '<'))
        elif i in frac[0]:
            rows.append((coeffs, ints[i] - const, '=='))
        else:
            rows.append(({v: -a for v, a in coeffs.items()}, const - ints[i], '<'))
            rows.append((coeffs, ints[i] + 1 - const, '<'))
    groups = [[i for i in g if values[space.clocks[i]] is not None] for g in frac[1:]]
    groups = [g for g in groups if g]
    for group in groups:
        for a, b in zip(group, group[1:]):
            rows.append(_difference(space, values, ints, b, a, '=='))
    for g1, g2 in zip(groups, groups[1:]):
        rows.append(_difference(space, values, ints, g1[0], g2[0], '<'))
    return rows


def _difference(space, values, ints, a, b, op):
    '''frac(a) - frac(b) op 0 written as coeffs . delays op bound.'''
    ca, va = values[space.clocks[a]]
    cb, vb = values[space.clocks[b]]
    coeffs = {}
    for v in va:
        coeffs[v] = coeffs.get(v, 0) + 1
    for v in vb:
        coeffs[v] = coeffs.get(v, 0) - 1
    coeffs = {v: x for v, x in coeffs.items() if x}
    bound = (ints[a] - ca * space.scale) - (ints[b] - cb * space.scale)
    return (coeffs, bound, op)


def _rowsHold(rows, delays):
    for coeffs, bound, op in rows:
        lhs = sum((Fraction(a) * delays[v] for v, a in coeffs.items()), Fraction(0))
        if op == '==' and lhs != bound or op == '<' and not lhs < bound or op == '<=' and not lhs <= bound:
            return False
    return True


def concretizeTimings(dra, prefix, cycle, start = None, startTime = 0):
    '''
    Chooses rational delays for the time edges of a lasso so that every visited state's
    region contains the concrete valuation and the cycle returns to the valuation it started from.

    Parameters
    ----------------
     dra - (DegeneralizedRA)
     prefix, cycle - lists of (state, edge index) as returned by nestedDfs
     start - (dict or None) clock valuation at the first state, all zero by default
     startTime - (rational) absolute time of the first state

    Returns
    ----------------
     TimedPath
    '''
    space = dra.space
    start = start or {c: Fraction(0) for c in space.clocks}
    symbolic = _Symbolic(space.clocks, start)
    first = dra.region((prefix + cycle)[0][0])
    for i, c in enumerate(space.clocks):
        if first[0][i] is None and symbolic.values[c] is not None and symbolic.values[c][0] * space.scale <= space.bounds[i]:
            symbolic.forget([c])
    rows = []
    plan = []
    nvars = 0
    loopValues = None
    walk = [(q, k, False) for q, k in prefix] + [(q, k, True) for q, k in cycle]
    for q, k, inCycle in walk:
        if inCycle and loopValues is None:
            loopValues = symbolic.snapshot()
        rows.extend(_regionRows(space, dra.region(q), symbolic.values))
        kind, t, target = dra.edges[q][k]
        plan.append((q, k, symbolic.snapshot(), nvars if kind == TIME else None))
        if kind == TIME:
            rows.append(({nvars: -1}, Fraction(0), '<'))
            symbolic.elapse(nvars)
            nvars += 1
        else:
            symbolic.reset(t.resets)
            live = space.active.get(t.dst, ()) if space.active is not None else range(len(space.clocks))
            symbolic.forget([c for i, c in enumerate(space.clocks) if i not in live and c not in t.resets])
    last = cycle[-1]
    rows.extend(_regionRows(space, dra.region(dra.edges[last[0]][last[1]][2]), symbolic.values))
    for c in space.clocks:
        before, after = loopValues[c], symbolic.values[c]
        i = space.position[c]
        if before is None or after is None or dra.region(cycle[0][0])[0][i] is None:
            continue
        coeffs = {v: 1 for v in after[1]}
        for v in before[1]:
            coeffs[v] = coeffs.get(v, 0) - 1
        coeffs = {v: a for v, a in coeffs.items() if a}
        rows.append((coeffs, (before[0] - after[0]) * space.scale, '=='))

    delays = _solveDelays(rows, nvars)
    # back to original time units
    now = fm.toRational(startTime)
    steps = []
    for q, k, values, var in plan:
        valuation = {}
        for c in space.clocks:
            v = values[c]
            if v is None:
                valuation[c] = None
            else:
                valuation[c] = v[0] + sum((delays[x] for x in v[1]), Fraction(0)) / space.scale
        steps.append((q, k, now, valuation))
        if var is not None:
            now += delays[var] / space.scale
    split = len(prefix)
    loopStart = steps[split][2]
    period = now - loopStart
    path = TimedPath(steps[:split], steps[split:], period, loopStart)
    logger.debug("timings concretized", extra={'event': 'timings', 'steps': len(steps), 'period': str(period)})
    return path


def _solveDelays(rows, nvars):
    '''Max-margin LP over the delays, rounded to small denominators and checked exactly.'''
    if nvars == 0:
        if not _rowsHold(rows, {}):
            raise UnrealizablePath("the path has no time edges and its constraints fail")
        return {}
    # variables: delays then the margin s; minimise -s
    aUb, bUb, aEq, bEq = [], [], [], []
    for coeffs, bound, op in rows:
        row = np.zeros(nvars + 1)
        for v, a in coeffs.items():
            row[v] = float(a)
        if op == '==':
            aEq.append(row[:])
            bEq.append(float(bound))
            continue
        if op == '<':
            row[nvars] = 1.0
        aUb.append(row)
        bUb.append(float(bound))
    cost = np.zeros(nvars + 1)
    cost[nvars] = -1.0
    bounds = [(0, None)] * nvars + [(0, 1)]
    result = linprog(cost, A_ub=np.array(aUb) if aUb else None, b_ub=np.array(bUb) if bUb else None,
                     A_eq=np.array(aEq) if aEq else None, b_eq=np.array(bEq) if bEq else None,
                     bounds=bounds, method='highs')
    if result.status != 0 or result.x[nvars] <= 1e-9:
        raise UnrealizablePath("no timing realizes the region path (status {})".format(result.status))
    for denominator in (2, 4, 8, 16, 60, 720, 10 ** 4, 10 ** 6):
        delays = {v: Fraction(float(x)).limit_denominator(denominator) for v, x in enumerate(result.x[:nvars])}
        if _rowsHold(rows, delays):
            return delays
    raise UnrealizablePath("rounded timings violate the region constraints")


#%% Membership
SIGNAL_CLOCK = 'sig'


def signalTst(signal, props = None):
    '''A transducer whose only run reads exactly the given lasso signal.'''
    ##
    # Error Handling
    ##
    if signal.lasso is None:
        raise InputError("membership needs a lasso signal")

    props = props if props is not None else signal.propositions
    bps = signal.breakpoints
    loopStart = signal.lasso[0]
    j = bps.index(loopStart)
    m = len(bps) - 1
    label = lambda values: makeCube({p: values[p] for p in props})
    base = lambda k: loopStart if k >= j else Fraction(0)
    states = {}
    for k in range(m):
        states['seg{}'.format(k)] = StateInfo(label(signal.intervalValues[k]),
                                              (ClockAtom(SIGNAL_CLOCK, '<=', bps[k + 1] - base(k)),))
    transitions = [Transition(INIT, 'seg0', label(signal.pointValues[0]), (), (SIGNAL_CLOCK,))]
    for k in range(m - 1):
        resets = (SIGNAL_CLOCK,) if k + 1 == j else ()
        transitions.append(Transition('seg{}'.format(k), 'seg{}'.format(k + 1), label(signal.pointValues[k + 1]),
                                      (ClockAtom(SIGNAL_CLOCK, '==', bps[k + 1] - base(k)),), resets))
    transitions.append(Transition('seg{}'.format(m - 1), 'seg{}'.format(j), label(signal.pointValues[j]),
                                  (ClockAtom(SIGNAL_CLOCK, '==', signal.lasso[1]),), (SIGNAL_CLOCK,)))
    return Tst(props, (), (SIGNAL_CLOCK,), states, transitions, [{'seg{}'.format(j)}], 'signal')


def membership(tst, signal, maxStates = None):
    '''True when tst has an accepting run over the lasso signal.'''
    reader = signalTst(signal, [p for p in signal.propositions if p in tst.inputs])
    joint = synchronousProduct(tst, reader)
    dra = degeneralize(buildRAC(joint, maxStates))
    return nestedDfs(dra) is not None


def dumpRegionAutomaton(ra):
    '''Deterministic text rendering for golden tests.'''
    lines = []
    for q, (loc, region, phase) in enumerate(ra.states):
        lines.append('q{} {} {} phase{}'.format(q, stateKey(loc), ra.space.text(region), phase))
        for kind, t, target in ra.edges[q]:
            lines.append('  {} -> q{}'.format(kind, target))
    return '\n'.join(lines) + '\n'
