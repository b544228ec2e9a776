# -*- coding: utf-8 -*-
"""
Name: planner.py
Last Updated: 10/18/2026

Plans over the product of the formula transducer with an abstraction of the
system: the label abstraction and its certified transitions, the product
restricted by what the controllers can do, initial plan synthesis inside the
winning set, reactive replanning at events and the control schedule that
realizes a plan.
"""
import json
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from riskplan.errors import (EmptyInitialSet, InfeasibleFromX0, NoPlan, UnrealizablePath, AssumptionViolated,
                             InputError, RiskPlanError)
from riskplan import formula as fm
from riskplan import risk
from riskplan import transducer as td
from riskplan import game
from riskplan import runtime as rt
from riskplan.feasibility import TRUE_CUBE, FeasibilityOracle, cubeText
from riskplan.region import TIME, DISCRETE, buildRAC, degeneralize, nestedDfs, concretizeTimings
from riskplan.transducer import INIT, Tst, Transition, normalizeGuard, stateKey
from riskplan.runtime import REACH_AT_EXACTLY, REACH_AFTER_OPEN, CONTROL_CLOCK

logger = logging.getLogger(__name__)


#%% System abstraction
def transitionKind(source, target):
    '''
    ReachAtExactly when every literal the target adds is true (a closed set reached at an
    instant), ReachAfterOpen when every one is false (an open set entered right after it),
    None when they are mixed or nothing changes.
    '''
    added = target - source
    if not added:
        return None
    values = [value for name, value in added]
    if all(values):
        return REACH_AT_EXACTLY
    if not any(values):
        return REACH_AFTER_OPEN
    return None


@dataclass
class AbstractTransition:
    source: frozenset
    target: frozenset
    kind: str
    guard: tuple
    controller: object = field(repr=False, default=None)


@dataclass
class SystemAbstraction:
    '''One state per predicate label of the formula transducer, linked where a controller is certified.'''
    states: list
    initial: list
    transitions: dict

    def transition(self, source, target):
        return self.transitions.get((source, target))

    def summary(self):
        return {'labels': len(self.states), 'initial': len(self.initial), 'links': len(self.transitions)}


def buildSystemAbstraction(tst, library, x0, oracle):
    '''
    Parameters
    ----------------
     tst - (Tst) the pruned formula transducer
     library - (ControllerLibrary) certifies label-to-label controllers
     x0 - (array) initial state
     oracle - (FeasibilityOracle)

    Returns
    ----------------
     SystemAbstraction
    '''
    labels = sorted({oracle.predicatePart(info.label) for info in tst.states.values()}, key=cubeText)
    x0 = np.asarray(x0, dtype=float).reshape(1, -1)
    initial = [label for label in labels if oracle.satisfiesAt(label, x0)[0]]
    ##
    # Error Handling
    ##
    if not initial:
        raise EmptyInitialSet("x0={} satisfies no state label of {}".format(x0[0].tolist(), tst.name))

    transitions = {}
    for source in labels:
        for target in labels:
            if source == target:
                continue
            kind = transitionKind(source, target)
            if kind is None:
                continue
            controller = library.certify(source, target, kind)
            if controller is not None:
                transitions[(source, target)] = AbstractTransition(source, target, kind, library.guard, controller)
    abstraction = SystemAbstraction(labels, initial, transitions)
    logger.info("system abstraction built", extra={'event': 'abstraction', **abstraction.summary()})
    return abstraction


def productO3O4O5(tst, abstraction, x0, oracle):
    '''
    Restricts the formula transducer to what the system can realize.
    [O3] drops label-changing transitions without a certified counterpart of the right kind,
    [O4] drops initial transitions x0 does not satisfy, [O5] adds the control clock with the
    controller guard on the kept label-changing transitions.

    Returns
    ----------------
     Tst over the clocks of tst plus the control clock
    '''
    x0 = np.asarray(x0, dtype=float).reshape(1, -1)
    ucs = set(oracle.uncontrollables)
    pred = oracle.predicatePart
    kept = []
    for t in tst.transitions:
        dstLabel = pred(tst.states[t.dst].label)
        if t.initial:
            if not (oracle.satisfiesAt(t.label, x0)[0] and oracle.satisfiesAt(dstLabel, x0)[0]):
                logger.debug("initial transition removed", extra={'event': 'prune', 'rule': 'O4',
                                                                  'transition': stateKey((t.src, t.dst)),
                                                                  'reason': 'x0 violates ' + cubeText(t.label | dstLabel)})
                continue
            kept.append(Transition(t.src, t.dst, t.label, t.guard, tuple(sorted(set(t.resets) | {CONTROL_CLOCK}))))
            continue
        if game.isEventTransition(t, ucs):
            kept.append(t)
            continue
        srcLabel, instant = pred(tst.states[t.src].label), pred(t.label)
        if srcLabel == dstLabel == instant:
            kept.append(t)
            continue
        link = abstraction.transition(srcLabel, dstLabel)
        expected = None if link is None else (dstLabel if link.kind == REACH_AT_EXACTLY else srcLabel)
        if link is None or instant != expected:
            reason = 'no certified controller' if link is None else 'instant label does not fit ' + link.kind
            logger.debug("transition removed", extra={'event': 'prune', 'rule': 'O3',
                                                      'transition': stateKey((t.src, t.dst)),
                                                      'reason': '{}: {} -> {}'.format(reason, cubeText(srcLabel),
                                                                                      cubeText(dstLabel))})
            continue
        kept.append(Transition(t.src, t.dst, t.label, normalizeGuard(t.guard + link.guard),
                               tuple(sorted(set(t.resets) | {CONTROL_CLOCK}))))
    product = Tst(tst.inputs, tst.outputs, tst.clocks + (CONTROL_CLOCK,), tst.states, kept, tst.acceptance,
                  tst.name + '^m')
    product = td.restrict(product, set(product.states), product.transitions)
    ##
    # Error Handling
    ##
    if not product.initialTransitions():
        raise InfeasibleFromX0("every initial transition is infeasible from x0={}".format(x0[0].tolist()))
    if len(product.states) > len(tst.states):
        raise RiskPlanError("the product has more states than the formula transducer")

    logger.info("product built", extra={'event': 'product', 'before': len(tst.transitions), **product.summary()})
    return product


#%% Plans
@dataclass
class PlanStep:
    '''A discrete step: at `time` the label of the transition, afterwards the target state's label.'''
    time: Fraction
    state: int
    edge: int
    transition: Transition
    label: frozenset
    holds: frozenset
    event: bool = False


class Plan(object):
    '''
    A lasso of degeneralized-automaton steps with concrete times.

    Parameters
    ----------------
     dra - (DegeneralizedRA) the automaton the steps live in
     prefix - (list) (state, edge, time, valuation) before the loop
     cycle - (list) (state, edge, time, valuation) of the first loop pass
     loopStart - (Fraction) time the loop starts
     period - (Fraction) loop duration
     table - (SymbolTable) deterministic table naming the propositions
     props - (list) propositions rendered by the plan
    '''

    def __init__(self, dra, prefix, cycle, loopStart, period, table, props):
        self.dra = dra
        self.prefix = list(prefix)
        self.cycle = list(cycle)
        self.loopStart = fm.toRational(loopStart)
        self.period = fm.toRational(period)
        self.table = table
        self.props = sorted(props)
        self.ucs = set(table.uncontrollables())

    def _step(self, entry):
        q, k, t, valuation = entry
        kind, transition, target = self.dra.edges[q][k]
        if kind != DISCRETE:
            return None
        holds = self.dra.tst.states[transition.dst].label
        return PlanStep(t, q, k, transition, transition.label, holds,
                        game.isEventTransition(transition, self.ucs))

    def walk(self):
        '''Trail entries with the loop unrolled forever: (state, edge, time, valuation).'''
        for entry in self.prefix:
            yield entry
        n = 0
        while True:
            shift = n * self.period
            for q, k, t, valuation in self.cycle:
                yield q, k, t + shift, valuation
            n += 1

    def steps(self, upto):
        '''Discrete steps at times up to `upto`.'''
        result = []
        for entry in self.walk():
            if entry[2] > upto:
                break
            step = self._step(entry)
            if step is not None:
                result.append(step)
        return result

    @property
    def signalLasso(self):
        '''(prefixEnd, period) of the rendered signal; one loop pass is unrolled into the prefix.'''
        return (self.loopStart + self.period, self.period)

    def horizon(self, periods = 1):
        return self.signalLasso[0] + periods * self.period

    def breakpoints(self, upto):
        marks = {Fraction(0)} | {s.time for s in self.steps(upto)}
        t = self.loopStart + self.period
        while t <= upto:
            marks.add(t)
            t += self.period
        return sorted(m for m in marks if m <= upto)

    def labelAt(self, t, point = True):
        '''The full label the plan prescribes at t: the step label at a step instant, the held label otherwise.'''
        steps = self.steps(t)
        if point and steps and steps[-1].time == t:
            return steps[-1].label
        before = [s for s in steps if s.time < t] if point else steps
        if not before:
            return steps[0].label if steps else TRUE_CUBE
        return before[-1].holds

    def segmentIndex(self, t):
        return max(len(self.steps(t)) - 1, 0)

    def events(self):
        return [s.time for s in self.steps(self.horizon()) if s.event]

    def _values(self, cube):
        values = dict(cube)
        return {p: bool(values.get(p, False)) for p in self.props}

    def toSignal(self):
        '''The plan as a Boolean lasso signal over its propositions.'''
        start, period = self.signalLasso
        horizon = start + period
        marks = self.breakpoints(horizon)
        points = [self._values(self.labelAt(b, True)) for b in marks[:-1]]
        intervals = [self._values(self.labelAt(b, False)) for b in marks[:-1]]
        return fm.BooleanSignal(marks, points, intervals, (start, period))

    def toFrame(self):
        frame = self.toSignal().toFrame()
        return frame.rename(columns={p: self.table.symbolOf(p) for p in self.props})

    def toJson(self):
        '''Segments with exact rational bounds and literals keyed by symbol, plus the lasso marker.'''
        signal = self.toSignal()
        segments = []
        for start, end, isPoint, values in signal.segments():
            segments.append({'t_start': fm.rationalText(start), 't_end': fm.rationalText(end),
                             'start_closed': isPoint, 'end_closed': isPoint,
                             'literals': {self.table.symbolOf(p): bool(v) for p, v in sorted(values.items())}})
        start, period = signal.lasso
        return {'segments': segments, 'lasso': {'prefix_end': fm.rationalText(start), 'period': fm.rationalText(period)}}

    def dumps(self):
        return json.dumps(self.toJson(), indent=2, sort_keys=True)

    def __repr__(self):
        return "Plan(steps={}, loopStart={}, period={})".format(len(self.prefix) + len(self.cycle),
                                                               fm.rationalText(self.loopStart), fm.rationalText(self.period))


def _bottomEdges(winning):
    '''(state, edge) pairs that serve the no-event assignment and stay in the winning set.'''
    ok = set()
    for q in winning.states:
        for k, target, ss in winning.moves.served[q]:
            if game.NO_EVENTS in ss and target in winning.states:
                ok.add((q, k))
    return ok


def _graph(dra, edges):
    '''Sparse weighted graph of the given edges: one unit per discrete step, a little per time step.'''
    best = {}
    for q, k in edges:
        kind, t, r = dra.edges[q][k]
        w = 1.0 if kind == DISCRETE else 1e-3
        if (q, r) not in best or w < best[(q, r)][0]:
            best[(q, r)] = (w, k)
    n = len(dra)
    rows = [q for q, r in best]
    cols = [r for q, r in best]
    data = [w for w, k in best.values()]
    return csr_matrix((data, (rows, cols)), shape=(n, n)), best


def _chain(pred, start, end):
    nodes = [end]
    while nodes[-1] != start:
        nodes.append(int(pred[nodes[-1]]))
    return nodes[::-1]


def _cycleCosts(graph, states, chunk = 64):
    '''Weight of the cheapest cycle through each of the given states, inf where there is none.'''
    incoming = graph.T.tocsr()
    costs = {}
    for lo in range(0, len(states), chunk):
        block = states[lo:lo + chunk]
        dist = np.atleast_2d(dijkstra(graph, directed=True, indices=block))
        for row, a in zip(dist, block):
            first, last = incoming.indptr[a], incoming.indptr[a + 1]
            closing = row[incoming.indices[first:last]] + incoming.data[first:last]
            costs[a] = float(closing.min()) if len(closing) else np.inf
    return costs


def restingRoom(oracle, recurring = ()):
    '''
    Scores the label a loop holds by the share of the workspace it leaves, ignoring the
    literals of recurring predicates, which the formula may ask for again at any time.
    '''
    recurring = set(recurring)

    def room(dra, q):
        loc = dra.location(q)
        if loc == INIT:
            return 0.0
        label = dra.tst.states[loc].label
        return oracle.room(frozenset((n, v) for n, v in label if n not in recurring))

    return room


def _lassos(dra, winning, start, room = None):
    '''
    Candidate (prefix, cycle) pairs: cycles with fewer discrete steps first, then the
    roomiest resting label, then the cheapest prefix plus cycle.
    '''
    edges = _bottomEdges(winning)
    graph, best = _graph(dra, edges)
    reverse = graph.T.tocsr()
    dist, pred = dijkstra(graph, directed=True, indices=start, return_predecessors=True)
    reached = sorted(q for q in dra.accepting if q in winning.states and np.isfinite(dist[q]))
    cycles = _cycleCosts(graph, reached)
    accepting = [a for a in reached if np.isfinite(cycles[a])]
    score = {a: room(dra, a) if room is not None else 0.0 for a in accepting}
    accepting.sort(key=lambda a: (int(cycles[a]), -score[a], dist[a] + cycles[a], a))
    for a in accepting:
        back, nxt = dijkstra(reverse, directed=True, indices=a, return_predecessors=True)
        options = [(w + (0.0 if r == a else back[r]), r) for (q, r), (w, k) in best.items() if q == a]
        options = [(c, r) for c, r in options if np.isfinite(c)]
        if not options:
            continue
        cost, r = min(options)
        loop = [a, r]
        while loop[-1] != a:
            loop.append(int(nxt[loop[-1]]))
        path = _chain(pred, start, a)
        prefix = [(u, best[(u, v)][1]) for u, v in zip(path, path[1:])]
        cycle = [(u, best[(u, v)][1]) for u, v in zip(loop, loop[1:])]
        yield prefix, cycle
    found = nestedDfs(dra, start, set(winning.states), lambda q, k: (q, k) in edges)
    if found is not None:
        yield found


def _searchPlan(dra, winning, start, valuation = None, startTime = 0, attempts = 25, room = None):
    for n, (prefix, cycle) in enumerate(_lassos(dra, winning, start, room)):
        if n >= attempts:
            break
        try:
            return concretizeTimings(dra, prefix, cycle, valuation, startTime)
        except UnrealizablePath as err:
            logger.debug("lasso candidate rejected", extra={'event': 'plan', 'reason': str(err)})
    raise NoPlan("no realizable accepting lasso inside the winning set from state {}".format(start))


def synthesizeInitialPlan(dra, winning, oracle, table, props, recurring = ()):
    '''
    Parameters
    ----------------
     dra - (DegeneralizedRA) of the product transducer
     winning - (WinningSet) computed with the continuity-preserving predecessor
     oracle - (FeasibilityOracle)
     table - (SymbolTable) deterministic table
     props - (list) propositions the plan renders
     recurring - (iterable) propositions left out when scoring the label the loop rests in

    Returns
    ----------------
     Plan starting at time 0 whose states all lie in the winning set
    '''
    ##
    # Error Handling
    ##
    if dra.initial not in winning:
        raise NoPlan("the initial state is not in the winning set")
    if not game.hasInitialOutput(dra, winning.states):
        raise NoPlan("no initial transition into the winning set sets the output")

    started = time.time()
    timed = _searchPlan(dra, winning, dra.initial, room=restingRoom(oracle, recurring))
    timed.validate(dra)
    plan = Plan(dra, timed.prefix, timed.cycle, timed.loopStart, timed.period, table, props)
    _assertWinning(plan, winning)
    logger.info("initial plan synthesized", extra={'event': 'plan', 'steps': len(plan.prefix) + len(plan.cycle),
                                                   'loop_start': str(plan.loopStart), 'period': str(plan.period),
                                                   'seconds': round(time.time() - started, 3)})
    return plan


def _assertWinning(plan, winning):
    for q, k, t, v in plan.prefix + plan.cycle:
        if q not in winning and plan.dra.location(q) != INIT:
            raise RiskPlanError("plan state {} at time {} left the winning set".format(q, t))


def _locate(plan, t):
    '''
    The state holding at time t just before an event, its clock valuation and the
    executed trail entries strictly before it.
    '''
    dra = plan.dra
    space = dra.space
    executed = []
    walk = plan.walk()
    entry = next(walk)
    while True:
        following = next(walk)
        q, k, start, valuation = entry
        kind, transition, target = dra.edges[q][k]
        if kind == DISCRETE and start == t:
            return q, dict(valuation), executed
        if kind == TIME and start <= t < following[2]:
            if start == t and dra.phase(q) == 0:
                return q, dict(valuation), executed
            elapsed = t - start
            now = {c: None if v is None else v + elapsed for c, v in valuation.items()}
            if space.isPoint(dra.region(q)) or dra.phase(q) == 1:
                executed.append(entry)
                return target, now, executed
            return q, now, executed
        if start > t:
            raise RiskPlanError("time {} is not covered by the plan".format(t))
        executed.append(entry)
        entry = following


def replan(plan, t, s, dra, winning, oracle, zeta = None, recurring = ()):
    '''
    Parameters
    ----------------
     plan - (Plan) being executed
     t - (rational) event instant, positive
     s - (frozenset) uncontrollable propositions true at t
     dra, winning - product automaton and its continuity-preserving winning set
     oracle - (FeasibilityOracle)
     zeta - (rational or None) minimal event separation
     recurring - (iterable) propositions left out when scoring the label the loop rests in

    Returns
    ----------------
     Plan agreeing with the executed plan before t, answering the event at t and
     continuing with an accepting lasso inside the winning set
    '''
    t = fm.toRational(t)
    s = frozenset(s)
    ##
    # Error Handling
    ##
    if t <= 0:
        raise InputError("events happen after time 0, got {}".format(t))
    if not s:
        raise InputError("replanning needs at least one true uncontrollable proposition")
    if zeta is not None:
        for previous in plan.events():
            if previous < t and t - previous < fm.toRational(zeta):
                raise AssumptionViolated("events at {} and {} are closer than zeta={}".format(
                    fm.rationalText(previous), fm.rationalText(t), fm.rationalText(zeta)), [previous, t])

    q, valuation, executed = _locate(plan, t)
    k = winning.hint(q, s)
    if q not in winning or k is None:
        raise NoPlan("state {} has no winning answer to {} at t={}".format(q, sorted(s), fm.rationalText(t)))
    kind, transition, target = dra.edges[q][k]
    after = dict(valuation)
    for c in transition.resets:
        after[c] = Fraction(0)
    active = dra.space.active.get(transition.dst, ()) if dra.space.active is not None else None
    if active is not None:
        for i, c in enumerate(dra.space.clocks):
            if i not in active and c not in transition.resets:
                after[c] = None
    timed = _searchPlan(dra, winning, target, after, t, room=restingRoom(oracle, recurring))
    prefix = executed + [(q, k, t, valuation)] + timed.prefix
    result = Plan(dra, prefix, timed.cycle, timed.loopStart, timed.period, plan.table, plan.props)
    _assertWinning(result, winning)
    logger.info("plan revised", extra={'event': 'replan', 'time': str(t), 'symbols': sorted(s),
                                       'loop_start': str(result.loopStart), 'period': str(result.period)})
    return result


#%% Control schedule
@dataclass
class Window:
    index: int
    start: Fraction
    end: Fraction
    source: frozenset
    target: frozenset
    kind: str
    controller: object = field(repr=False, default=None)


class ControlSchedule(object):
    '''
    Controller windows realizing a plan: between consecutive changes of the predicate label
    the controller of that label pair runs; after the last change a hold controller keeps
    the label. ReachAtExactly transitions hand over at the change instant, ReachAfterOpen
    ones right after it, which coincide for the continuous state.
    '''

    def __init__(self, plan, abstraction, library, oracle):
        self.plan = plan
        self.abstraction = abstraction
        self.library = library
        self.oracle = oracle
        self._windows = []
        self._upto = Fraction(-1)

    def changes(self, upto):
        '''(time, source label, target label) of every predicate label change up to `upto`.'''
        pred = self.oracle.predicatePart
        result = []
        current = None
        for step in self.plan.steps(upto):
            label = pred(step.holds)
            if current is not None and label != current:
                result.append((step.time, current, label))
            current = label
        return result

    def windows(self, upto):
        '''Windows covering [0, upto]; the last one is a hold window unless a change follows within reach.'''
        if upto <= self._upto:
            return self._windows
        pred = self.oracle.predicatePart
        start, label = Fraction(0), pred(self.plan.steps(Fraction(0))[0].holds)
        windows = []
        for when, source, target in self.changes(upto):
            link = self.abstraction.transition(source, target)
            ##
            # Error Handling
            ##
            if link is None:
                raise RiskPlanError("plan changes {} -> {} without a certified controller".format(
                    cubeText(source), cubeText(target)))
            windows.append(Window(len(windows), start, when, source, target, link.kind, link.controller))
            start, label = when, target
        windows.append(Window(len(windows), start, None, label, None, None, self.library.hold(label)))
        self._windows = windows
        self._upto = upto
        return windows

    def windowAt(self, t):
        t = fm.toRational(t)
        # one full period past both t and the loop start contains the next change if there is one
        upto = max(t, self.plan.loopStart) + self.plan.period + 1
        for window in self.windows(upto):
            if window.start <= t and (window.end is None or t < window.end):
                return window
        raise RiskPlanError("no control window covers t={}".format(t))


def toControlSchedule(plan, abstraction, library, oracle):
    '''The controller windows realizing the plan.'''
    schedule = ControlSchedule(plan, abstraction, library, oracle)
    logger.debug("control schedule", extra={'event': 'schedule', 'windows': len(schedule.windows(plan.horizon()))})
    return schedule


#%% Pipeline
class PlanningPipeline(object):
    '''
    Runs determinization, the product construction, the winning set and plan synthesis,
    keeping every intermediate artifact.

    Parameters
    ----------------
     problem - (PlanningProblem) as loaded by specFile.loadSpec
     maxStates - (int or None) cap on region automata
     numThreads - (int) threads for tightening and move tabulation
    '''

    def __init__(self, problem, maxStates = None, numThreads = 0):
        self.problem = problem
        self.maxStates = maxStates
        self.numThreads = numThreads
        self.theta = None
        self.detTable = None
        self.oracle = None
        self.library = None
        self.tstTheta = None
        self.abstraction = None
        self.tstM = None
        self.dra = None
        self.winning = None
        self.plan = None

    @property
    def uncontrollables(self):
        return self.problem.table.uncontrollables()

    def determinize(self):
        p = self.problem
        if self.theta is None:
            pnf = fm.toPositiveNormalForm(p.formula)
            theta, self.detTable = risk.determinize(pnf, p.table, p.cMap, p.ws, p.X, p.method, p.verifyInclusion)
            self.theta = fm.abstract(theta, self.detTable)
            self.thetaBase = fm.rewriteToBase(self.theta)
            self.oracle = FeasibilityOracle(self.detTable, p.ws, p.X.mean, p.gridResolution, seed=p.seed)
        return self.theta

    def checkSatisfiable(self, variant = game.PI_HAT):
        self.determinize()
        p = self.problem
        return game.checkSatisfiable(self.thetaBase, self.oracle, self.uncontrollables, p.zeta, p.epsZeno, variant,
                                     self.maxStates, self.numThreads)

    def buildProduct(self):
        self.determinize()
        p = self.problem
        if self.winning is not None:
            return self.winning
        self.library = rt.ControllerLibrary(self.oracle, p.system.vmax, p.guardLower, p.plannerResolution,
                                            p.certifySamples, p.seed)
        tst = td.compile(self.thetaBase, self.uncontrollables, p.zeta)
        self.tstTheta = td.pruneO1O2(tst, self.oracle)
        self.abstraction = buildSystemAbstraction(self.tstTheta, self.library, p.x0, self.oracle)
        self.tstM = productO3O4O5(self.tstTheta, self.abstraction, p.x0, self.oracle)
        guarded = td.addZenoGuard(self.tstM, p.epsZeno, game.zenoExempt(self.uncontrollables))
        self.dra = degeneralize(buildRAC(guarded, self.maxStates))
        self.winning = game.winningSet(self.dra, self.oracle, game.PI_HAT, self.numThreads)
        return self.winning

    def synthesize(self):
        self.buildProduct()
        if self.plan is None:
            self.plan = synthesizeInitialPlan(self.dra, self.winning, self.oracle, self.detTable, self.props,
                                              fm.recurringAtoms(self.thetaBase))
        return self.plan

    @property
    def props(self):
        return sorted(fm.atoms(self.theta))

    def schedule(self, plan):
        return toControlSchedule(plan, self.abstraction, self.library, self.oracle)

    def replanner(self):
        def answer(plan, t, s):
            revised = replan(plan, t, s, self.dra, self.winning, self.oracle, self.problem.zeta,
                             fm.recurringAtoms(self.thetaBase))
            return revised, self.schedule(revised)
        return answer

    def simulate(self, events = None, periods = None, hook = None):
        plan = self.synthesize()
        p = self.problem
        events = (events or rt.EventSchedule()).validate(p.zeta)
        return rt.simulate(self.schedule(plan), plan, events, p.system, self.oracle, self.detTable, p.x0,
                           self.replanner(), periods or p.lassoPeriods, hook, p.zeta)

    def verify(self, trace):
        self.determinize()
        p = self.problem
        return rt.verifyTrace(trace, self.theta, self.detTable, p.table, p.X, risk.MonteCarlo(p.mcSamples, p.seed))
