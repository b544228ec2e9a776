# -*- coding: utf-8 -*-
"""
Name: transducer.py
Last Updated: 10/18/2026

Timed signal transducers (TSTs): the operator blocks, synchronous and
input-output products, compilation of base-form formulas, label pruning
against the feasibility oracle and the zeno separation guard.

Labels are literal cubes (see feasibility.makeCube). A state or transition
carries one cube over the union of its input and output propositions;
disjunctive labels are represented by parallel states or transitions.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import gcd

from riskplan.errors import AlphabetMismatch, InitialStateRemoved, InputError
from riskplan import formula as fm
from riskplan.feasibility import makeCube, mergeCubes, cubeText, cubeFormula, dnfExpand, TRUE_CUBE

logger = logging.getLogger(__name__)

INIT = '<init>'

FUTURE_EVENTUALLY = 'FutureEvBounded'
PAST_EVENTUALLY = 'PastEvBounded'
UNTIL = 'UntilUnbounded'
SINCE = 'PastUntilUnbounded'
NEG = 'Neg'
AND = 'And'
UNCONTROLLABLE = 'UncontrollableProp'
BLOCK_KINDS = (FUTURE_EVENTUALLY, PAST_EVENTUALLY, UNTIL, SINCE, NEG, AND, UNCONTROLLABLE)

# state tags read by the game
FRESH = 'fresh'
UC_CLOCK = 'ucclock'


#%% Clock constraints
_OPS = ('<', '<=', '==', '>=', '>')


@dataclass(frozen=True, order=True)
class ClockAtom:
    clock: str
    op: str
    const: Fraction

    def __post_init__(self):
        if self.op not in _OPS:
            raise InputError("unknown clock comparison '{}'".format(self.op))
        object.__setattr__(self, 'const', fm.toRational(self.const))
        if self.const < 0:
            raise InputError("clock constants are nonnegative, got {}".format(self.const))

    def holds(self, value):
        if self.op == '<':
            return value < self.const
        if self.op == '<=':
            return value <= self.const
        if self.op == '==':
            return value == self.const
        if self.op == '>=':
            return value >= self.const
        return value > self.const

    @property
    def lowerBound(self):
        return self.op in ('>', '>=', '==')

    def __str__(self):
        return "{}{}{}".format(self.clock, self.op, fm.rationalText(self.const))


def normalizeGuard(atoms):
    '''A guard is a sorted tuple of distinct clock atoms read as their conjunction.'''
    return tuple(sorted(set(atoms)))


def guardText(guard):
    return ' & '.join(str(a) for a in guard) or 'true'


#%% Transducer
@dataclass(frozen=True)
class Transition:
    src: object
    dst: object
    label: frozenset
    guard: tuple = ()
    resets: tuple = ()

    @property
    def initial(self):
        return self.src == INIT


@dataclass(frozen=True)
class StateInfo:
    label: frozenset
    invariant: tuple = ()
    tags: tuple = ()


def stateKey(state):
    return repr(state)


class Tst(object):
    '''
    A timed signal transducer.

    Parameters
    ----------------
     inputs - (tuple) input propositions
     outputs - (tuple) output propositions
     clocks - (tuple) clock names, all starting at 0
     states - (dict) state id -> StateInfo; the initial pseudo state INIT is not listed
     transitions - (iterable) Transition objects
     acceptance - (iterable) generalized Buchi family, each a set of state ids
     name - (str) used in logs and dumps
    '''

    def __init__(self, inputs, outputs, clocks, states, transitions, acceptance = (), name = 'tst'):
        self.inputs = tuple(inputs)
        self.outputs = tuple(outputs)
        self.clocks = tuple(clocks)
        self.states = dict(states)
        self.transitions = tuple(transitions)
        self.acceptance = tuple(frozenset(a) for a in acceptance)
        self.name = name
        self._outgoing = None

    @property
    def variables(self):
        return tuple(self.inputs) + tuple(v for v in self.outputs if v not in self.inputs)

    def outgoing(self, src):
        if self._outgoing is None:
            table = {}
            for t in self.transitions:
                table.setdefault(t.src, []).append(t)
            self._outgoing = table
        return self._outgoing.get(src, [])

    def initialTransitions(self):
        return list(self.outgoing(INIT))

    def constants(self):
        '''Largest constant each clock is compared against.'''
        consts = {c: Fraction(0) for c in self.clocks}
        for info in self.states.values():
            for a in info.invariant:
                consts[a.clock] = max(consts[a.clock], a.const)
        for t in self.transitions:
            for a in t.guard:
                consts[a.clock] = max(consts[a.clock], a.const)
        return consts

    def timeScale(self):
        '''Least common multiple of the denominators of every clock constant.'''
        scale = 1
        atoms = [a for info in self.states.values() for a in info.invariant]
        atoms += [a for t in self.transitions for a in t.guard]
        for a in atoms:
            scale = scale * a.const.denominator // gcd(scale, a.const.denominator)
        return scale

    def accepting(self, state):
        '''Indices of the acceptance sets containing the state.'''
        return [i for i, a in enumerate(self.acceptance) if state in a]

    def summary(self):
        return {'states': len(self.states), 'transitions': len(self.transitions),
                'clocks': len(self.clocks), 'acceptance': len(self.acceptance)}

    def __repr__(self):
        return "Tst({}, states={}, transitions={})".format(self.name, len(self.states), len(self.transitions))


def renameTst(tst, names = None, clocks = None, name = None):
    '''Copy of tst with propositions and clocks renamed through the given maps.'''
    names = names or {}
    clocks = clocks or {}
    pn = lambda v: names.get(v, v)
    cn = lambda c: clocks.get(c, c)
    relabel = lambda cube: frozenset((pn(v), b) for v, b in cube)
    reguard = lambda g: normalizeGuard(ClockAtom(cn(a.clock), a.op, a.const) for a in g)

    def retag(tag):
        if tag[0] == FRESH:
            return (FRESH, pn(tag[1]))
        if tag[0] == UC_CLOCK:
            return (UC_CLOCK, pn(tag[1]), cn(tag[2]), tag[3])
        return tag

    states = {s: StateInfo(relabel(i.label), reguard(i.invariant), tuple(retag(tag) for tag in i.tags))
              for s, i in tst.states.items()}
    transitions = [Transition(t.src, t.dst, relabel(t.label), reguard(t.guard), tuple(sorted(cn(c) for c in t.resets)))
                   for t in tst.transitions]
    return Tst([pn(v) for v in tst.inputs], [pn(v) for v in tst.outputs], [cn(c) for c in tst.clocks],
               states, transitions, tst.acceptance, name or tst.name)


#%% Atomic blocks
def _stateless(inputs, fn, name):
    '''Block whose output is a pointwise Boolean function of its inputs.'''
    states = {}
    for values in product((False, True), repeat=len(inputs)):
        assignment = dict(zip(inputs, values))
        assignment['y'] = fn(*values)
        states[''.join('1' if v else '0' for v in values)] = StateInfo(makeCube(assignment))
    # the instant label of a move may be any valuation, not only the target state's
    transitions = []
    for src in [INIT] + sorted(states):
        for dst in sorted(states):
            for instant in states.values():
                transitions.append(Transition(src, dst, instant.label))
    return Tst(inputs, ('y',), (), states, transitions, (), name)


def _futureEventually(b):
    '''y = F_(0,b) p with one clock x.'''
    A = makeCube({'p': False, 'y': False})
    W = makeCube({'p': False, 'y': True})
    T = makeCube({'p': True, 'y': True})
    states = {
        'A': StateInfo(A),
        'W': StateInfo(W, (ClockAtom('x', '<=', b),)),
        'T': StateInfo(T),
        'O': StateInfo(W, (ClockAtom('x', '<', b),)),
    }
    instantFalse = [makeCube({'p': p, 'y': False}) for p in (False, True)]
    instantTrue = [makeCube({'p': p, 'y': True}) for p in (False, True)]
    transitions = []

    def leave(src, guard):
        # y false at the instant: nothing in (0,b) ahead; y true: something strictly within b
        for label in instantFalse:
            transitions.append(Transition(src, 'A', label, guard))
            transitions.append(Transition(src, 'W', label, guard, ('x',)))
        for label in instantTrue:
            transitions.append(Transition(src, 'T', label, guard))
            transitions.append(Transition(src, 'O', label, guard, ('x',)))

    leave(INIT, ())
    leave('T', ())
    # a pending obligation is met when p shows up, exactly at b from W, strictly before b from O
    for src, guard in (('W', (ClockAtom('x', '>=', b),)), ('O', (ClockAtom('x', '<', b),))):
        for label in instantFalse:
            if dict(label)['p']:
                transitions.append(Transition(src, 'A', label, guard))
                transitions.append(Transition(src, 'W', label, guard, ('x',)))
        for label in instantTrue:
            transitions.append(Transition(src, 'T', label, guard))
            if dict(label)['p']:
                transitions.append(Transition(src, 'O', label, guard, ('x',)))
    # nothing pending: p stays false at the instant and y with it
    transitions.append(Transition('A', 'A', makeCube({'p': False, 'y': False})))
    transitions.append(Transition('A', 'W', makeCube({'p': False, 'y': False}), (), ('x',)))
    return Tst(('p',), ('y',), ('x',), states, transitions, (), 'F(0,{})'.format(fm.rationalText(b)))


def _pastEventually(b):
    '''y = O_(0,b) d with one clock x measuring the time since d was last seen.'''
    states = {
        'N': StateInfo(makeCube({'d': False, 'y': False})),
        'D': StateInfo(makeCube({'d': True, 'y': True})),
        'R': StateInfo(makeCube({'d': False, 'y': True}), (ClockAtom('x', '<=', b),)),
    }
    transitions = []

    def arrive(src, y, guard):
        transitions.append(Transition(src, 'D', makeCube({'d': True, 'y': y}), guard))
        transitions.append(Transition(src, 'R', makeCube({'d': True, 'y': y}), guard, ('x',)))
        transitions.append(Transition(src, 'D', makeCube({'d': False, 'y': y}), guard))

    arrive(INIT, False, ())
    transitions.append(Transition(INIT, 'N', makeCube({'d': False, 'y': False})))
    arrive('N', False, ())
    for d in (False, True):
        transitions.append(Transition('D', 'R', makeCube({'d': d, 'y': True}), (), ('x',)))
        transitions.append(Transition('D', 'D', makeCube({'d': d, 'y': True})))
    arrive('R', True, (ClockAtom('x', '<', b),))
    arrive('R', False, (ClockAtom('x', '>=', b),))
    transitions.append(Transition('R', 'N', makeCube({'d': False, 'y': False}), (ClockAtom('x', '>=', b),)))
    return Tst(('d',), ('y',), ('x',), states, transitions, (), 'O(0,{})'.format(fm.rationalText(b)))


_UNTIL_STATES = {
    'S2': {'d1': True, 'd2': True, 'y': True},
    'Z': {'d1': False, 'y': False},
    'P': {'d1': True, 'd2': False, 'y': True},
    'Pf': {'d1': True, 'd2': False, 'y': True},
    'N': {'d1': True, 'd2': False, 'y': False},
}


def _until():
    '''
    y = d1 U_(0,inf) d2. P waits for d2 and is the only non-accepting state;
    Pf is its accepting copy, entered when the instant itself carries d2.
    '''
    states = {s: StateInfo(makeCube(label)) for s, label in _UNTIL_STATES.items()}
    transitions = []
    for src in [INIT] + sorted(states):
        for dst in sorted(states):
            yTarget = _UNTIL_STATES[dst]['y']
            for v1, v2 in product((False, True), repeat=2):
                if dst == 'P' and v2 or dst == 'Pf' and not v2:
                    continue
                carried = v2 or (v1 and yTarget)
                if src in ('P', 'Pf') and not carried:
                    continue
                if src == 'N' and carried:
                    continue
                transitions.append(Transition(src, dst, makeCube({'d1': v1, 'd2': v2, 'y': yTarget})))
    accepting = frozenset(s for s in states if s != 'P')
    return Tst(('d1', 'd2'), ('y',), (), states, transitions, (accepting,), 'U(0,inf)')


_SINCE_STATES = {
    'S2': {'d1': True, 'd2': True, 'y': True},
    'Z': {'d1': False, 'y': False},
    'PT': {'d1': True, 'd2': False, 'y': True},
    'PF': {'d1': True, 'd2': False, 'y': False},
}


def _since():
    '''y = d1 S_(0,inf) d2; the output at an instant repeats the output just before it.'''
    states = {s: StateInfo(makeCube(label)) for s, label in _SINCE_STATES.items()}
    transitions = []
    for src in [INIT] + sorted(states):
        ySource = False if src == INIT else _SINCE_STATES[src]['y']
        for dst in sorted(states):
            for v1, v2 in product((False, True), repeat=2):
                carried = v2 or (v1 and ySource)
                if dst == 'PT' and not carried or dst == 'PF' and carried:
                    continue
                transitions.append(Transition(src, dst, makeCube({'d1': v1, 'd2': v2, 'y': ySource})))
    return Tst(('d1', 'd2'), ('y',), (), states, transitions, (), 'S(0,inf)')


def _uncontrollable(zeta):
    '''
    uc is false on every open interval and true only at instants at least zeta apart,
    measured by clock z.
    '''
    states = {
        'I0': StateInfo(makeCube({'uc': False}), (), ((FRESH, 'uc'),)),
        'I': StateInfo(makeCube({'uc': False}), (), ((UC_CLOCK, 'uc', 'z', zeta),)),
    }
    fire = makeCube({'uc': True})
    transitions = [
        Transition(INIT, 'I0', makeCube({'uc': False})),
        Transition(INIT, 'I', fire, (), ('z',)),
        Transition('I0', 'I', fire, (), ('z',)),
        Transition('I', 'I', fire, (ClockAtom('z', '>=', zeta),), ('z',)),
    ]
    return Tst((), ('uc',), ('z',), states, transitions, (), 'UC({})'.format(fm.rationalText(zeta)))


def unitTst():
    '''Single always-accepting state with an unconstrained label.'''
    return Tst((), (), (), {'u': StateInfo(TRUE_CUBE)},
               [Transition(INIT, 'u', TRUE_CUBE), Transition('u', 'u', TRUE_CUBE)], (), 'unit')


def atomicTst(kind, bound = None):
    '''
    Parameters
    ----------------
     kind - (str) one of BLOCK_KINDS
     bound - (rational) b of the bounded eventually blocks, or zeta of the uncontrollable block

    Returns
    ----------------
     the block transducer over its generic propositions (p/d/d1/d2 in, y or uc out) and clock x or z
    '''
    ##
    # Error Handling
    ##
    if kind not in BLOCK_KINDS:
        raise InputError("unknown block kind '{}'".format(kind))
    if kind in (FUTURE_EVENTUALLY, PAST_EVENTUALLY, UNCONTROLLABLE):
        if bound is None:
            raise InputError("block {} needs a bound".format(kind))
        bound = fm.toRational(bound)
        if bound <= 0:
            raise InputError("block bounds are positive, got {}".format(bound))

    if kind == FUTURE_EVENTUALLY:
        return _futureEventually(bound)
    if kind == PAST_EVENTUALLY:
        return _pastEventually(bound)
    if kind == UNTIL:
        return _until()
    if kind == SINCE:
        return _since()
    if kind == NEG:
        return _stateless(('d',), lambda d: not d, 'Neg')
    if kind == AND:
        return _stateless(('d1', 'd2'), lambda a, b: a and b, 'And')
    return _uncontrollable(bound)


#%% Boolean wires
def _eval3(expr, assignment):
    '''Three-valued evaluation; None when the partial assignment leaves it open.'''
    if isinstance(expr, fm.Top):
        return True
    if isinstance(expr, fm.Bot):
        return False
    if isinstance(expr, fm.Atom):
        return assignment.get(expr.name)
    if isinstance(expr, fm.Not):
        v = _eval3(expr.arg, assignment)
        return None if v is None else not v
    if isinstance(expr, (fm.And, fm.Or)):
        short = isinstance(expr, fm.Or)
        left = _eval3(expr.left, assignment)
        if left is short:
            return short
        right = _eval3(expr.right, assignment)
        if right is short:
            return short
        if left is None or right is None:
            return None
        return not short
    raise InputError("wire equations are Boolean, got {}".format(fm.toText(expr)))


class _Wiring(object):
    '''
    Equations var <-> expr, ordered so that every expression only reads propositions
    defined earlier or left free; an equation with var None is a plain requirement.
    '''

    def __init__(self, equations, keep):
        self.equations = list(equations)
        self.keep = frozenset(keep)
        self.defined = frozenset(v for v, e in self.equations if v is not None)
        read = set()
        for v, e in self.equations:
            read |= fm.atoms(e)
        self.read = frozenset(read)
        self._cache = {}

    def __bool__(self):
        return bool(self.equations)

    def consistent(self, cube):
        '''False when some equation is already violated by the partial cube.'''
        if not self.equations:
            return True
        assignment = dict(cube)
        for var, expr in self.equations:
            value = _eval3(expr, assignment)
            if value is None:
                continue
            if var is None:
                if not value:
                    return False
            elif var in assignment and assignment[var] != value:
                return False
        return True

    def complete(self, cube):
        '''
        All completions of cube satisfying the equations, projected onto the kept propositions.
        Free propositions read by an equation are enumerated; others stay open.
        '''
        if cube in self._cache:
            return self._cache[cube]
        base = dict(cube)
        free = sorted(v for v in self.read if v not in base and v not in self.defined)
        results = set()
        for values in product((False, True), repeat=len(free)):
            assignment = dict(base)
            assignment.update(zip(free, values))
            ok = True
            for var, expr in self.equations:
                value = _eval3(expr, assignment)
                if var is None:
                    ok = bool(value)
                elif assignment.get(var, value) != value:
                    ok = False
                else:
                    assignment[var] = value
                if not ok:
                    break
            if ok:
                results.add(frozenset((k, v) for k, v in assignment.items() if k in self.keep))
        completed = sorted(results, key=sorted)
        self._cache[cube] = completed
        return completed


#%% Products
def _productStateId(comps, cube):
    return (comps, tuple(sorted(cube)))


def _naryProduct(components, wiring, inputs, outputs, requireOutput = None, name = 'product'):
    '''
    Reachable synchronous product of the components.
    A product state is a tuple of component states plus the kept valuation on the
    interval; at every discrete step each component either moves or stays, and a
    staying component's state label must hold at the instant.
    '''
    n = len(components)
    clocks = []
    for comp in components:
        for c in comp.clocks:
            if c in clocks:
                raise AlphabetMismatch("clock '{}' is shared by two components".format(c))
            clocks.append(c)
    moveCache = {}

    def moves(comps):
        if comps in moveCache:
            return moveCache[comps]
        found = []

        def dfs(i, cube, guard, resets, targets, moved):
            if i == n:
                if moved or (wiring and comps != INIT):
                    found.append((cube, normalizeGuard(guard), tuple(sorted(set(resets))), tuple(targets)))
                return
            comp = components[i]
            if comps != INIT:
                here = comps[i]
                merged = mergeCubes(cube, comp.states[here].label)
                if merged is not None and wiring.consistent(merged):
                    dfs(i + 1, merged, guard, resets, targets + [here], moved)
            src = INIT if comps == INIT else comps[i]
            for t in comp.outgoing(src):
                merged = mergeCubes(cube, t.label)
                if merged is None or not wiring.consistent(merged):
                    continue
                dfs(i + 1, merged, guard + list(t.guard), resets + list(t.resets), targets + [t.dst], True)

        dfs(0, TRUE_CUBE, [], [], [], False)
        moveCache[comps] = found
        return found

    stateCache = {}

    def targetStates(comps):
        if comps not in stateCache:
            label = TRUE_CUBE
            for comp, s in zip(components, comps):
                label = mergeCubes(label, comp.states[s].label)
                if label is None:
                    break
            stateCache[comps] = [] if label is None else wiring.complete(label)
        return stateCache[comps]

    states = {}
    transitions = []
    acceptance = []
    for i, comp in enumerate(components):
        everything = frozenset(comp.states)
        for a in comp.acceptance:
            if a != everything:
                acceptance.append((i, a))
    sources = [INIT]
    seen = {INIT}
    while sources:
        src = sources.pop()
        srcComps = INIT if src == INIT else src[0]
        for cube, guard, resets, targets in moves(srcComps):
            instants = wiring.complete(cube)
            if src == INIT and requireOutput is not None:
                instants = [c for c in instants if requireOutput in c]
            for label in targetStates(targets):
                dst = _productStateId(targets, label)
                for instant in instants:
                    transitions.append(Transition(src, dst, instant, guard, resets))
                if dst not in seen and instants:
                    seen.add(dst)
                    sources.append(dst)
                    infos = [comp.states[s] for comp, s in zip(components, targets)]
                    states[dst] = StateInfo(label,
                                            normalizeGuard(a for info in infos for a in info.invariant),
                                            tuple(tag for info in infos for tag in info.tags))
    family = [frozenset(s for s in states if s[0][i] in a) for i, a in acceptance]
    result = Tst(inputs, outputs, clocks, states, sorted(set(transitions), key=_transitionKey), family, name)
    logger.debug("product built", extra={'event': 'product', 'tst': name, **result.summary()})
    return result


def _transitionKey(t):
    return (stateKey(t.src), stateKey(t.dst), sorted(t.label), [str(a) for a in t.guard], t.resets)


def _disjointClocks(a, b):
    clash = set(a.clocks) & set(b.clocks)
    if not clash:
        return a, b
    a = renameTst(a, clocks={c: 'a.' + c for c in a.clocks})
    b = renameTst(b, clocks={c: 'b.' + c for c in b.clocks})
    return a, b


def synchronousProduct(a, b):
    '''
    Parameters
    ----------------
     a, b - (Tst) factors; clashing clock names are renamed with a./b. prefixes

    Returns
    ----------------
     Tst over the union of both alphabets whose runs are the pairs of runs agreeing on shared propositions
    '''
    a, b = _disjointClocks(a, b)
    keep = set(a.variables) | set(b.variables)
    inputs = [v for v in a.inputs] + [v for v in b.inputs if v not in a.inputs]
    outputs = [v for v in a.outputs] + [v for v in b.outputs if v not in a.outputs]
    return _naryProduct([a, b], _Wiring([], keep), inputs, outputs, name='{}||{}'.format(a.name, b.name))


def ioComposition(a, b, wire = None):
    '''
    Feeds the single output of a into the input `wire` of b (default: b's only input)
    and hides it; the result has the inputs of both and the outputs of b.
    '''
    ##
    # Error Handling
    ##
    if len(a.outputs) != 1:
        raise AlphabetMismatch("{} has outputs {}, expected exactly one".format(a.name, a.outputs))
    if wire is None:
        if len(b.inputs) != 1:
            raise AlphabetMismatch("{} has inputs {}, name the wired one".format(b.name, b.inputs))
        wire = b.inputs[0]
    if wire not in b.inputs:
        raise AlphabetMismatch("{} has no input '{}'".format(b.name, wire))

    hidden = '~{}'.format(a.outputs[0])
    a = renameTst(a, names={a.outputs[0]: hidden})
    b = renameTst(b, names={wire: hidden})
    a, b = _disjointClocks(a, b)
    inputs = [v for v in a.inputs] + [v for v in b.inputs if v not in a.inputs and v != hidden]
    outputs = list(b.outputs)
    keep = set(inputs) | set(outputs)
    return _naryProduct([a, b], _Wiring([], keep), inputs, outputs, name='{}>{}'.format(a.name, b.name))


def constrain(tst, equation):
    '''
    Conjoins a Boolean formula to every label; labels it leaves open are split into
    full cubes over the propositions it mentions and contradicted ones disappear.
    '''
    def refine(label):
        return dnfExpand(fm.And(cubeFormula(label), equation))

    splits = {INIT: [INIT]}
    states = {}
    for s in sorted(tst.states, key=stateKey):
        info = tst.states[s]
        cubes = refine(info.label)
        splits[s] = []
        for cube in cubes:
            sid = s if len(cubes) == 1 else (s, tuple(sorted(cube)))
            splits[s].append(sid)
            states[sid] = StateInfo(cube, info.invariant, info.tags)
    transitions = []
    for t in tst.transitions:
        for cube in refine(t.label):
            for src in splits[t.src]:
                for dst in splits[t.dst]:
                    transitions.append(Transition(src, dst, cube, t.guard, t.resets))
    acceptance = [frozenset(sid for s in a for sid in splits.get(s, [])) for a in tst.acceptance]
    return Tst(tst.inputs, tst.outputs, tst.clocks, states, transitions, acceptance, tst.name)


def completeLabels(tst, props):
    '''Splits every label into full minterms over props.'''
    props = sorted(props)
    if not props:
        return tst
    tautology = None
    for p in props:
        lit = fm.Not(fm.And(fm.Not(fm.Atom(p)), fm.Atom(p)))
        tautology = lit if tautology is None else fm.And(tautology, lit)
    return constrain(tst, tautology)


#%% Compilation
class _Compiler(object):

    def __init__(self, uncontrollables, zeta):
        self.uncontrollables = set(uncontrollables)
        self.zeta = zeta
        self.blocks = []
        self.equations = []
        self.index = {}

    def wire(self, f):
        '''Boolean expression over atoms and block outputs equivalent to f.'''
        if isinstance(f, (fm.Top, fm.Atom)):
            return f
        if isinstance(f, fm.Not):
            return fm.Not(self.wire(f.arg))
        if isinstance(f, fm.And):
            return fm.And(self.wire(f.left), self.wire(f.right))
        return fm.Atom(self.block(f))

    def block(self, f):
        if f in self.index:
            return self.index[f]
        if isinstance(f, (fm.FutureEventually, fm.PastEventually)):
            args = [self.wire(f.arg)]
        else:
            args = [self.wire(f.left), self.wire(f.right)]
        k = len(self.blocks) + 1
        out = 'w{}'.format(k)
        if isinstance(f, fm.FutureEventually):
            tst = atomicTst(FUTURE_EVENTUALLY, f.interval.upper)
        elif isinstance(f, fm.PastEventually):
            tst = atomicTst(PAST_EVENTUALLY, f.interval.upper)
        elif isinstance(f, fm.Until):
            tst = atomicTst(UNTIL)
        else:
            tst = atomicTst(SINCE)
        names = {'y': out}
        for local, expr in zip(tst.inputs, args):
            names[local] = '{}.{}'.format(out, local)
            self.equations.append((names[local], expr))
        self.blocks.append(renameTst(tst, names=names, clocks={'x': 'x{}'.format(k)}, name='{}:{}'.format(out, tst.name)))
        self.index[f] = out
        return out

    def eventBlocks(self, atoms):
        blocks = []
        for u in sorted(atoms & self.uncontrollables):
            block = atomicTst(UNCONTROLLABLE, self.zeta)
            blocks.append(renameTst(block, names={'uc': u}, clocks={'z': 'z.{}'.format(u)}, name='{}:{}'.format(u, block.name)))
        return blocks


def compile(phi, uncontrollables = (), zeta = None, requireInitialTrue = True):
    '''
    Parameters
    ----------------
     phi - (Formula) in base form (formula.rewriteToBase)
     uncontrollables - (iterable) atoms modelled as uncontrollable propositions
     zeta - (rational) minimal separation of their true instants
     requireInitialTrue - (bool) keep only runs whose output is true at time 0

    Returns
    ----------------
     Tst with inputs the atoms of phi and the single output y
    '''
    ##
    # Error Handling
    ##
    if not fm.isBaseForm(phi):
        raise InputError("compile expects a base-form formula, got {}".format(fm.toText(phi)))
    atoms = fm.atoms(phi)
    if atoms & set(uncontrollables) and (zeta is None or fm.toRational(zeta) <= 0):
        raise InputError("uncontrollable propositions need a positive zeta")
    if 'y' in atoms:
        raise InputError("'y' is reserved for the transducer output")

    compiler = _Compiler(uncontrollables, zeta)
    root = compiler.wire(phi)
    equations = compiler.equations + [('y', root)]
    components = compiler.blocks + compiler.eventBlocks(atoms)
    if not components:
        components = [unitTst()]
    keep = set(atoms) | {'y'}
    wiring = _Wiring(equations, keep)
    requirement = ('y', True) if requireInitialTrue else None
    result = _naryProduct(components, wiring, sorted(atoms), ('y',), requirement, 'compiled')
    logger.info("formula compiled", extra={'event': 'compile', 'formula': fm.toText(phi),
                                           'blocks': len(components), **result.summary()})
    return result


#%% Pruning and guards
def restrict(tst, states, transitions, name = None):
    '''Keeps the given states and transitions, then trims to what INIT reaches.'''
    live = {INIT}
    frontier = [INIT]
    out = {}
    for t in transitions:
        if (t.src == INIT or t.src in states) and t.dst in states:
            out.setdefault(t.src, []).append(t)
    while frontier:
        s = frontier.pop()
        for t in out.get(s, []):
            if t.dst not in live:
                live.add(t.dst)
                frontier.append(t.dst)
    kept = [t for ts in out.values() for t in ts if t.src in live]
    result = Tst(tst.inputs, tst.outputs, tst.clocks, {s: tst.states[s] for s in states if s in live},
                 sorted(kept, key=_transitionKey), [frozenset(s for s in a if s in live) for a in tst.acceptance],
                 name or tst.name)
    return result


def pruneO1O2(tst, oracle):
    '''
    Removes states [O1] and transitions [O2] whose predicate labels no point of the
    workspace satisfies.

    Parameters
    ----------------
     tst - (Tst) with labels over the oracle's propositions
     oracle - (FeasibilityOracle)

    Returns
    ----------------
     the pruned Tst, trimmed to its reachable part
    '''
    keptStates = set()
    for s in sorted(tst.states, key=stateKey):
        label = tst.states[s].label
        if oracle.existsX(label):
            keptStates.add(s)
        else:
            logger.debug("state removed", extra={'event': 'prune', 'rule': 'O1', 'state': stateKey(s),
                                                 'reason': 'unsatisfiable label ' + cubeText(label)})
    keptTransitions = []
    for t in tst.transitions:
        if t.dst not in keptStates or (t.src != INIT and t.src not in keptStates):
            continue
        if oracle.existsX(t.label):
            keptTransitions.append(t)
        else:
            logger.debug("transition removed", extra={'event': 'prune', 'rule': 'O2', 'transition': stateKey((t.src, t.dst)),
                                                      'reason': 'unsatisfiable label ' + cubeText(t.label)})
    result = restrict(tst, keptStates, keptTransitions)
    if not result.initialTransitions():
        raise InitialStateRemoved("every initial transition of {} was pruned".format(tst.name))
    logger.info("labels pruned", extra={'event': 'prune', 'before': len(tst.states), **result.summary()})
    return result


ZENO_CLOCK = 'zeno'


def hasPositiveLowerBound(t):
    return any(a.lowerBound and a.const > 0 for a in t.guard)


def addZenoGuard(tst, eps, exempt = None):
    '''
    Appends a clock separating consecutive discrete steps by at least eps.
    The initial transitions and those `exempt(t)` accepts keep their guards;
    every transition resets the clock.
    '''
    eps = fm.toRational(eps)
    ##
    # Error Handling
    ##
    if eps <= 0:
        raise InputError("the zeno separation must be positive, got {}".format(eps))
    if ZENO_CLOCK in tst.clocks:
        raise AlphabetMismatch("{} already has a zeno clock".format(tst.name))

    atom = ClockAtom(ZENO_CLOCK, '>=', eps)
    transitions = []
    for t in tst.transitions:
        guard = t.guard
        if not t.initial and not (exempt is not None and exempt(t)):
            guard = normalizeGuard(t.guard + (atom,))
        transitions.append(Transition(t.src, t.dst, t.label, guard, tuple(sorted(set(t.resets) | {ZENO_CLOCK}))))
    return Tst(tst.inputs, tst.outputs, tst.clocks + (ZENO_CLOCK,), tst.states, transitions, tst.acceptance, tst.name)


#%% Export
def dumpTst(tst):
    '''Deterministic text rendering of a transducer.'''
    ids = {INIT: 's0'}
    for k, s in enumerate(sorted(tst.states, key=stateKey)):
        ids[s] = 'q{}'.format(k)
    lines = ['tst {}'.format(tst.name),
             'inputs {}'.format(' '.join(tst.inputs)),
             'outputs {}'.format(' '.join(tst.outputs)),
             'clocks {}'.format(' '.join(tst.clocks))]
    for s in sorted(tst.states, key=stateKey):
        info = tst.states[s]
        lines.append('state {} [{}] inv {} {}'.format(ids[s], cubeText(info.label), guardText(info.invariant), stateKey(s)))
    for t in sorted(tst.transitions, key=lambda t: (ids[t.src], ids[t.dst], sorted(t.label), [str(a) for a in t.guard])):
        lines.append('trans {} -> {} [{}] guard {} reset {}'.format(ids[t.src], ids[t.dst], cubeText(t.label),
                                                                  guardText(t.guard), ' '.join(t.resets) or '-'))
    for i, a in enumerate(tst.acceptance):
        lines.append('accept {} {}'.format(i, ' '.join(sorted(ids[s] for s in a))))
    return '\n'.join(lines) + '\n'
