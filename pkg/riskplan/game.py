# -*- coding: utf-8 -*-
"""
Name: game.py
Last Updated: 10/18/2026

Controllable predecessors over a degeneralized region automaton, the nested
winning-set fixed point with strategy hints, and the satisfiability check that
chains compilation, pruning, the zeno guard and the region construction.
"""
import logging
import time
from dataclasses import dataclass, field
from itertools import combinations
from multiprocessing.dummy import Pool as ThreadPool

from riskplan.errors import TooManyUncontrollables, RiskPlanError, InputError
from riskplan import formula as fm
from riskplan import transducer as td
from riskplan.region import TIME, buildRAC, degeneralize
from riskplan.transducer import ClockAtom, FRESH, UC_CLOCK, INIT

logger = logging.getLogger(__name__)

PI = 'pi'
PI_HAT = 'pi_hat'
MAX_UNCONTROLLABLES = 8

# s is the set of uncontrollable propositions true at the instant; the empty set is s-bottom
NO_EVENTS = frozenset()


def eventAssignments(uncontrollables):
    '''All 2^n assignments as frozensets of true propositions, bottom first.'''
    ucs = sorted(uncontrollables)
    ##
    # Error Handling
    ##
    if len(ucs) > MAX_UNCONTROLLABLES:
        raise TooManyUncontrollables("{} uncontrollable propositions, at most {} are supported".format(
            len(ucs), MAX_UNCONTROLLABLES))
    return [frozenset(c) for n in range(len(ucs) + 1) for c in combinations(ucs, n)]


def _sDict(s, uncontrollables):
    return {u: u in s for u in uncontrollables}


def isEventTransition(t, uncontrollables):
    '''A transition taken because some uncontrollable proposition is true at the instant.'''
    return any(value and name in uncontrollables for name, value in t.label)


class _Moves(object):
    '''
    Per degeneralized state, the admissible event assignments and for each outgoing
    edge the assignments it serves, computed once and shared by both predecessor variants.
    '''

    def __init__(self, dra, oracle, variant, numThreads = 0):
        self.dra = dra
        self.oracle = oracle
        self.variant = variant
        self.ucs = sorted(oracle.uncontrollables)
        self.assignments = eventAssignments(self.ucs)
        self.admissible = [None] * len(dra)
        self.served = [None] * len(dra)
        if numThreads:
            pool = ThreadPool(numThreads)
            rows = pool.map(self._state, range(len(dra)))
            pool.close()
            pool.join()
        else:
            rows = [self._state(q) for q in range(len(dra))]
        for q, (admissible, served) in enumerate(rows):
            self.admissible[q] = admissible
            self.served[q] = served
        self.predecessors = [[] for _ in range(len(dra))]
        for q, served in enumerate(self.served):
            for k, target, ss in served:
                self.predecessors[target].append((q, k, ss))

    def firable(self, q):
        loc = self.dra.location(q)
        if loc == INIT:
            return set()
        region = self.dra.region(q)
        space = self.dra.space
        result = set()
        for tag in self.dra.tst.states[loc].tags:
            if tag[0] == FRESH:
                result.add(tag[1])
            elif tag[0] == UC_CLOCK and space.satisfies(region, (ClockAtom(tag[2], '>=', tag[3]),)):
                result.add(tag[1])
        return result

    def _state(self, q):
        dra, oracle = self.dra, self.oracle
        if dra.phase(q) == 1 or dra.location(q) == INIT:
            admissible = [NO_EVENTS]
        else:
            fire = self.firable(q)
            admissible = [s for s in self.assignments if s <= fire]
        loc = dra.location(q)
        served = []
        for k, (kind, t, target) in enumerate(dra.edges[q]):
            ss = set()
            for s in admissible:
                if self._serves(loc, kind, t, s):
                    ss.add(s)
            if ss:
                served.append((k, target, frozenset(ss)))
        return admissible, served

    def _serves(self, loc, kind, t, s):
        oracle = self.oracle
        if kind == TIME:
            return s == NO_EVENTS and bool(oracle.existsX(self.dra.tst.states[loc].label, _sDict(s, self.ucs)))
        if not oracle.existsX(t.label, _sDict(s, self.ucs)):
            return False
        if self.variant == PI_HAT and s != NO_EVENTS and not t.initial:
            src = oracle.predicatePart(self.dra.tst.states[loc].label)
            if not oracle.forallImplies(src, oracle.predicatePart(t.label)):
                return False
            if not oracle.forallImplies(src, oracle.predicatePart(self.dra.tst.states[t.dst].label)):
                return False
        return True


def controllablePredecessor(W, dra, oracle, variant = PI_HAT, moves = None):
    '''
    States that can answer every admissible event assignment with an edge into W.

    Parameters
    ----------------
     W - (set) degeneralized states
     dra - (DegeneralizedRA)
     oracle - (FeasibilityOracle)
     variant - (str) 'pi', or 'pi_hat' which also asks event edges to keep the state's
               predicate label valid across the jump
     moves - (_Moves) precomputed move table, built when omitted

    Returns
    ----------------
     set of states
    '''
    ##
    # Error Handling
    ##
    if variant not in (PI, PI_HAT):
        raise InputError("variant must be 'pi' or 'pi_hat', got '{}'".format(variant))

    moves = moves or _Moves(dra, oracle, variant)
    result = set()
    for q in range(len(dra)):
        covered = set()
        for k, target, ss in moves.served[q]:
            if target in W:
                covered |= ss
        if all(s in covered for s in moves.admissible[q]):
            result.add(q)
    return result


@dataclass
class WinningSet:
    '''
    Winning states with one witnessing edge per (state, event assignment).
    '''
    states: frozenset
    hints: dict
    variant: str
    iterations: int
    dra: object = field(repr=False, default=None)
    moves: object = field(repr=False, default=None)
    # sizes of the outer iterates, never increasing
    chain: list = field(default_factory=list)

    def __contains__(self, q):
        return q in self.states

    def __len__(self):
        return len(self.states)

    def hint(self, q, s = NO_EVENTS):
        return self.hints.get((q, frozenset(s)))


def _attractor(moves, base, baseHints):
    '''Least X containing base with X closed under controllable predecessors.'''
    n = len(moves.admissible)
    need = [len(a) for a in moves.admissible]
    done = [set() for _ in range(n)]
    hints = dict(baseHints)
    inside = set(base)
    queue = list(base)
    while queue:
        r = queue.pop()
        for q, k, ss in moves.predecessors[r]:
            if q in inside:
                continue
            for s in ss:
                if s not in done[q]:
                    done[q].add(s)
                    need[q] -= 1
                    hints[(q, s)] = k
            if need[q] == 0:
                inside.add(q)
                queue.append(q)
    return inside, {key: k for key, k in hints.items() if key[0] in inside}


def winningSet(dra, oracle, variant = PI_HAT, numThreads = 0):
    '''
    Greatest fixed point over W of the least fixed point
    H = pi(H) | (accepting & pi(W)).

    Parameters
    ----------------
     dra - (DegeneralizedRA)
     oracle - (FeasibilityOracle)
     variant - (str) 'pi' or 'pi_hat'
     numThreads - (int) threads used to tabulate the moves, 0 for none

    Returns
    ----------------
     WinningSet
    '''
    moves = _Moves(dra, oracle, variant, numThreads)
    W = set(range(len(dra)))
    chain = [len(W)]
    iterations = 0
    while True:
        iterations += 1
        base = set()
        baseHints = {}
        for q in dra.accepting:
            chosen = {}
            for k, target, ss in moves.served[q]:
                if target in W:
                    for s in ss:
                        chosen.setdefault(s, k)
            if all(s in chosen for s in moves.admissible[q]):
                base.add(q)
                baseHints.update({(q, s): k for s, k in chosen.items()})
        H, hints = _attractor(moves, base, baseHints)
        ##
        # Error Handling
        ##
        if not H <= W:
            raise RiskPlanError("winning set iteration {} is not monotone".format(iterations))
        chain.append(len(H))
        logger.debug("winning set iteration", extra={'event': 'winning', 'iteration': iterations, 'size': len(H)})
        if H == W:
            break
        W = H
    result = WinningSet(frozenset(W), hints, variant, iterations, dra, moves, chain)
    logger.info("winning set computed", extra={'event': 'winning', 'variant': variant, 'states': len(dra),
                                               'winning': len(W), 'iterations': iterations})
    return result


@dataclass
class SatResult:
    '''Verdict of the satisfiability check and the artifacts it built.'''
    sat: bool
    reason: str
    winning: WinningSet = None
    dra: object = None
    tst: object = None
    stats: dict = field(default_factory=dict)

    def __bool__(self):
        return self.sat


def zenoExempt(uncontrollables):
    '''Exemption used by the pipeline: event transitions and guards with a positive lower bound.'''
    ucs = set(uncontrollables)

    def exempt(t):
        return isEventTransition(t, ucs) or td.hasPositiveLowerBound(t)

    return exempt


def hasInitialOutput(dra, winning):
    '''An initial edge into the winning set whose label sets the output y.'''
    for kind, t, target in dra.edges[dra.initial]:
        if t is not None and ('y', True) in t.label and target in winning:
            return True
    return False


def checkSatisfiable(theta, oracle, uncontrollables = (), zeta = None, epsZeno = 1, variant = PI_HAT,
                     maxStates = None, numThreads = 0):
    '''
    Compiles the deterministic formula, prunes it against the workspace, adds the zeno
    guard, builds the degeneralized region automaton and decides whether the initial state wins.

    Parameters
    ----------------
     theta - (Formula) deterministic formula over predicate and uncontrollable propositions, base form
     oracle - (FeasibilityOracle)
     uncontrollables - (iterable) uncontrollable propositions
     zeta - (rational) minimal separation of their events
     epsZeno - (rational) minimal separation of discrete steps
     variant - (str) 'pi' or 'pi_hat'
     maxStates - (int or None) cap on the region automaton

    Returns
    ----------------
     SatResult; on failure reason names the condition that failed
    '''
    started = time.time()
    try:
        tst = td.compile(theta, uncontrollables, zeta)
        tst = td.pruneO1O2(tst, oracle)
    except RiskPlanError as err:
        if getattr(err, 'exitCode', None) == 1:
            logger.info("unsatisfiable after pruning", extra={'event': 'checksat', 'reason': str(err)})
            return SatResult(False, 'initial transition pruned: {}'.format(err))
        raise
    tst = td.addZenoGuard(tst, epsZeno, zenoExempt(uncontrollables))
    dra = degeneralize(buildRAC(tst, maxStates))
    winning = winningSet(dra, oracle, variant, numThreads)
    stats = {'states': len(tst.states), 'transitions': len(tst.transitions), 'regions': len(dra.ra),
             'degeneralized': len(dra), 'winning': len(winning), 'seconds': round(time.time() - started, 3)}
    if dra.initial not in winning:
        result = SatResult(False, 'initial state not in the winning set', winning, dra, tst, stats)
    elif not hasInitialOutput(dra, winning.states):
        result = SatResult(False, 'no initial transition sets the output', winning, dra, tst, stats)
    else:
        result = SatResult(True, 'initial state wins', winning, dra, tst, stats)
    logger.info("satisfiability decided", extra={'event': 'checksat', 'sat': result.sat, 'reason': result.reason,
                                                 'formula': fm.toText(theta), **stats})
    return result
