# -*- coding: utf-8 -*-
"""
Name: formula.py
Last Updated: 10/18/2026

This script contains the temporal logic side of riskplan:
    - the formula AST (future and past interval operators),
    - a parser for the text syntax and a printer that round-trips with it,
    - positive normal form, canonical form and the rewrite into the base
      operators the transducer library supports,
    - the symbol table and the predicate <-> proposition abstraction,
    - a dense-time monitor that evaluates formulas over piecewise-constant
      Boolean signals, with a prefix + lasso representation for infinite signals.

Text syntax:
    formula := disj ; disj := conj ('|' conj)* ; conj := impl ('&' impl)*
    impl := unary ('->' unary)?
    unary := '!' unary | ('F'|'G'|'O'|'H') interval unary
           | primary (('U'|'S'|'R'|'T') interval unary)?
    primary := atom | 'top' | 'bot' | '(' formula ')'
    interval := ('('|'[') rational ',' (rational|'inf') (')'|']')
"""
import re
import logging
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional

import pandas as pd

from riskplan.errors import (InputError, FormulaSyntaxError, UnknownSymbol, SingletonInterval,
                             UnsupportedInterval, InsufficientHorizon)

logger = logging.getLogger(__name__)


#%% Rationals
def toRational(value):
    '''
    Converts ints, decimal strings, 'a/b' strings, floats and Fractions into an exact Fraction.
    Floats go through their shortest decimal representation, so 0.1 becomes 1/10.
    '''
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError("expected a rational number, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        raise InputError("'{}' is not a rational number".format(value))


def rationalText(value):
    value = toRational(value)
    if value.denominator == 1:
        return str(value.numerator)
    return "{}/{}".format(value.numerator, value.denominator)


#%% Intervals
@dataclass(frozen=True)
class Interval:
    lower: Fraction
    upper: Optional[Fraction]
    lowerOpen: bool = True
    upperOpen: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'lower', toRational(self.lower))
        if self.upper is not None:
            object.__setattr__(self, 'upper', toRational(self.upper))
        else:
            object.__setattr__(self, 'upperOpen', True)
        ##
        # Error Handling
        ##
        if self.lower < 0:
            raise InputError("interval lower bound must be nonnegative, got {}".format(self.lower))
        if self.upper is not None and self.upper < self.lower:
            raise InputError("interval upper bound {} is below the lower bound {}".format(self.upper, self.lower))
        if self.upper is not None and self.upper == self.lower:
            raise SingletonInterval("singleton interval {} is not allowed".format(self))

    @property
    def bounded(self):
        return self.upper is not None

    def contains(self, d):
        d = toRational(d)
        if d < self.lower or (d == self.lower and self.lowerOpen):
            return False
        if self.upper is None:
            return True
        return d < self.upper or (d == self.upper and not self.upperOpen)

    def __str__(self):
        left = '(' if self.lowerOpen else '['
        if self.upper is None:
            return "{}{},inf)".format(left, rationalText(self.lower))
        right = ')' if self.upperOpen else ']'
        return "{}{},{}{}".format(left, rationalText(self.lower), rationalText(self.upper), right)


OPEN_INF = Interval(0, None, True, True)


def openInterval(upper):
    return Interval(0, upper, True, True)


#%% AST
@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    interval: Interval
    right: Formula


@dataclass(frozen=True)
class Since(Formula):
    left: Formula
    interval: Interval
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    interval: Interval
    right: Formula


@dataclass(frozen=True)
class Trigger(Formula):
    left: Formula
    interval: Interval
    right: Formula


@dataclass(frozen=True)
class FutureEventually(Formula):
    interval: Interval
    arg: Formula


@dataclass(frozen=True)
class PastEventually(Formula):
    interval: Interval
    arg: Formula


@dataclass(frozen=True)
class FutureAlways(Formula):
    interval: Interval
    arg: Formula


@dataclass(frozen=True)
class PastAlways(Formula):
    interval: Interval
    arg: Formula


_BINARY = (And, Or)
_BINARY_TEMPORAL = (Until, Since, Release, Trigger)
_UNARY_TEMPORAL = (FutureEventually, PastEventually, FutureAlways, PastAlways)
_PREFIX_KEYWORDS = {'F': FutureEventually, 'G': FutureAlways, 'O': PastEventually, 'H': PastAlways}
_INFIX_KEYWORDS = {'U': Until, 'S': Since, 'R': Release, 'T': Trigger}
_KEYWORD_OF = {cls: key for key, cls in list(_PREFIX_KEYWORDS.items()) + list(_INFIX_KEYWORDS.items())}


def children(f):
    if isinstance(f, Not) or isinstance(f, _UNARY_TEMPORAL):
        return (f.arg,)
    if isinstance(f, _BINARY) or isinstance(f, _BINARY_TEMPORAL):
        return (f.left, f.right)
    return ()


def atoms(f):
    '''Returns the set of atom names appearing in f.'''
    if isinstance(f, Atom):
        return {f.name}
    found = set()
    for child in children(f):
        found |= atoms(child)
    return found


def negatedAtoms(f):
    '''Atoms appearing directly under a negation (the residual negations of a PNF formula).'''
    if isinstance(f, Not) and isinstance(f.arg, Atom):
        return {f.arg.name}
    found = set()
    for child in children(f):
        found |= negatedAtoms(child)
    return found


def recurringAtoms(f, inside = False):
    '''Atoms under an unbounded future operator, the ones the formula can ask for again at any later time.'''
    if isinstance(f, Atom):
        return {f.name} if inside else set()
    if isinstance(f, (Until, Release, FutureEventually, FutureAlways)) and not f.interval.bounded:
        inside = True
    found = set()
    for child in children(f):
        found |= recurringAtoms(child, inside)
    return found


def mapAtoms(f, fn):
    '''Rebuilds f with every atom replaced by fn(atom).'''
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, Not):
        return Not(mapAtoms(f.arg, fn))
    if isinstance(f, _BINARY):
        return type(f)(mapAtoms(f.left, fn), mapAtoms(f.right, fn))
    if isinstance(f, _BINARY_TEMPORAL):
        return type(f)(mapAtoms(f.left, fn), f.interval, mapAtoms(f.right, fn))
    if isinstance(f, _UNARY_TEMPORAL):
        return type(f)(f.interval, mapAtoms(f.arg, fn))
    return f


def mapNodes(f, fn):
    '''Top-down rewrite: fn(node) returns a replacement or None to recurse into the node.'''
    replacement = fn(f)
    if replacement is not None:
        return replacement
    if isinstance(f, Not):
        return Not(mapNodes(f.arg, fn))
    if isinstance(f, _BINARY):
        return type(f)(mapNodes(f.left, fn), mapNodes(f.right, fn))
    if isinstance(f, _BINARY_TEMPORAL):
        return type(f)(mapNodes(f.left, fn), f.interval, mapNodes(f.right, fn))
    if isinstance(f, _UNARY_TEMPORAL):
        return type(f)(f.interval, mapNodes(f.arg, fn))
    return f


def depth(f):
    kids = children(f)
    if not kids:
        return 0
    return 1 + max(depth(child) for child in kids)


#%% Symbol table
class SymbolTable(object):
    '''
    Maps every symbol used in a formula to its kind and payload.
    Predicates (risk and deterministic) are numbered in insertion order and
    abstracted to the propositions p1, p2, ...; uncontrollable and abstract
    propositions keep their own names.
    '''
    RISK = 'RiskPredicate'
    DET = 'DetPredicate'
    UNCONTROLLABLE = 'UncontrollableProp'
    ABSTRACT = 'AbstractProp'
    KINDS = (RISK, DET, UNCONTROLLABLE, ABSTRACT)

    _RESERVED = re.compile(r'^p\d+$')

    def __init__(self):
        self._kinds = {}
        self._payloads = {}
        self._propOf = {}
        self._symbolOf = {}

    def add(self, symbol, kind, payload = None):
        ##
        # Error Handling
        ##
        if kind not in self.KINDS:
            raise InputError("unknown symbol kind '{}'".format(kind))
        if symbol in self._kinds:
            raise InputError("symbol '{}' is defined twice".format(symbol))
        if symbol in ('top', 'bot') or symbol in _PREFIX_KEYWORDS or symbol in _INFIX_KEYWORDS:
            raise InputError("'{}' is a reserved word".format(symbol))
        if kind != self.ABSTRACT and self._RESERVED.match(symbol):
            raise InputError("'{}' clashes with the abstract proposition names p1, p2, ...".format(symbol))
        self._kinds[symbol] = kind
        self._payloads[symbol] = payload
        if kind in (self.RISK, self.DET):
            prop = "p{}".format(len(self.predicates()))
        else:
            prop = symbol
        self._propOf[symbol] = prop
        self._symbolOf[prop] = symbol
        return prop

    def replace(self, symbol, kind, payload):
        '''Swaps a predicate's kind and payload keeping its proposition (used by determinization).'''
        self.kindOf(symbol)
        self._kinds[symbol] = kind
        self._payloads[symbol] = payload

    def copy(self):
        table = SymbolTable()
        table._kinds = dict(self._kinds)
        table._payloads = dict(self._payloads)
        table._propOf = dict(self._propOf)
        table._symbolOf = dict(self._symbolOf)
        return table

    def kindOf(self, symbol):
        if symbol not in self._kinds:
            raise UnknownSymbol("unknown symbol '{}'".format(symbol))
        return self._kinds[symbol]

    def payloadOf(self, symbol):
        self.kindOf(symbol)
        return self._payloads[symbol]

    def propOf(self, symbol):
        self.kindOf(symbol)
        return self._propOf[symbol]

    def symbolOf(self, prop):
        if prop not in self._symbolOf:
            raise UnknownSymbol("unknown proposition '{}'".format(prop))
        return self._symbolOf[prop]

    def symbols(self):
        return list(self._kinds)

    def predicates(self):
        return [s for s in self._kinds if self._kinds[s] in (self.RISK, self.DET)]

    def riskPredicates(self):
        return [s for s in self._kinds if self._kinds[s] == self.RISK]

    def uncontrollables(self):
        return [s for s in self._kinds if self._kinds[s] == self.UNCONTROLLABLE]

    def predicateProps(self):
        return [self._propOf[s] for s in self.predicates()]

    def isPredicateProp(self, prop):
        return prop in self._symbolOf and self._kinds[self._symbolOf[prop]] in (self.RISK, self.DET)

    def __contains__(self, symbol):
        return symbol in self._kinds


def abstract(f, table):
    '''Tr: replaces predicate atoms by their abstract propositions.'''
    return mapAtoms(f, lambda a: Atom(table.propOf(a.name)))


def concretize(f, table):
    '''Tr^-1: replaces abstract propositions by the predicates they stand for.'''
    return mapAtoms(f, lambda a: Atom(table.symbolOf(a.name)))


#%% Parser
_TOKEN = re.compile(r'\s*(?:(?P<num>\d+(?:\.\d+|/\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>->|[!&|()\[\],]))')


def _tokenize(text):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            raise FormulaSyntaxError("unexpected character '{}'".format(text[pos:].strip()[:1]), pos)
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(('end', None, len(text)))
    return tokens


class _Parser(object):

    def __init__(self, text, table):
        self.tokens = _tokenize(text)
        self.index = 0
        self.table = table

    def peek(self, offset = 0):
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def advance(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, value):
        kind, text, pos = self.advance()
        if text != value:
            raise FormulaSyntaxError("expected '{}' but found '{}'".format(value, text if text is not None else 'end of input'), pos)

    def keywordAhead(self, keywords):
        kind, text, pos = self.peek()
        return kind == 'name' and text in keywords and self.peek(1)[1] in ('(', '[')

    def parse(self):
        f = self.parseDisj()
        kind, text, pos = self.peek()
        if kind != 'end':
            raise FormulaSyntaxError("unexpected '{}'".format(text), pos)
        return f

    def parseDisj(self):
        f = self.parseConj()
        while self.peek()[1] == '|':
            self.advance()
            f = Or(f, self.parseConj())
        return f

    def parseConj(self):
        f = self.parseImpl()
        while self.peek()[1] == '&':
            self.advance()
            f = And(f, self.parseImpl())
        return f

    def parseImpl(self):
        f = self.parseUnary()
        if self.peek()[1] == '->':
            self.advance()
            return Or(Not(f), self.parseUnary())
        return f

    def parseUnary(self):
        kind, text, pos = self.peek()
        if text == '!':
            self.advance()
            return Not(self.parseUnary())
        if self.keywordAhead(_PREFIX_KEYWORDS):
            self.advance()
            interval = self.parseInterval()
            return _PREFIX_KEYWORDS[text](interval, self.parseUnary())
        f = self.parsePrimary()
        if self.keywordAhead(_INFIX_KEYWORDS):
            op = self.advance()[1]
            interval = self.parseInterval()
            return _INFIX_KEYWORDS[op](f, interval, self.parseUnary())
        return f

    def parsePrimary(self):
        kind, text, pos = self.advance()
        if text == '(':
            f = self.parseDisj()
            self.expect(')')
            return f
        if kind != 'name':
            raise FormulaSyntaxError("expected a formula but found '{}'".format(text if text is not None else 'end of input'), pos)
        if text == 'top':
            return Top()
        if text == 'bot':
            return Bot()
        if self.table is not None:
            self.table.kindOf(text)
        return Atom(text)

    def parseInterval(self):
        kind, text, pos = self.advance()
        if text not in ('(', '['):
            raise FormulaSyntaxError("expected an interval", pos)
        lowerOpen = text == '('
        kind, lowText, lowPos = self.advance()
        if kind != 'num':
            raise FormulaSyntaxError("expected a rational lower bound", lowPos)
        self.expect(',')
        kind, upText, upPos = self.advance()
        if upText == 'inf':
            upper = None
        elif kind == 'num':
            upper = upText
        else:
            raise FormulaSyntaxError("expected a rational upper bound or 'inf'", upPos)
        kind, close, closePos = self.advance()
        if close not in (')', ']'):
            raise FormulaSyntaxError("expected ')' or ']' to close the interval", closePos)
        if upper is None and close == ']':
            raise FormulaSyntaxError("an unbounded interval must be open on the right", closePos)
        try:
            return Interval(lowText, upper, lowerOpen, close == ')')
        except SingletonInterval:
            raise
        except InputError as e:
            raise FormulaSyntaxError(str(e), pos)


def parse(text, table = None):
    '''
    Parameters
    ----------------
     text - (str) formula in the riskplan text syntax
     table - (SymbolTable or None) when given, every atom must be defined in it

    Returns
    ----------------
     the Formula AST; implications are desugared to disjunctions
    '''
    if not isinstance(text, str):
        raise FormulaSyntaxError("formula text must be a string", 0)
    return _Parser(text, table).parse()


def toText(f):
    '''Fully parenthesised text accepted by parse().'''
    if isinstance(f, Top):
        return 'top'
    if isinstance(f, Bot):
        return 'bot'
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return '!' + toText(f.arg)
    if isinstance(f, And):
        return '({} & {})'.format(toText(f.left), toText(f.right))
    if isinstance(f, Or):
        return '({} | {})'.format(toText(f.left), toText(f.right))
    if isinstance(f, _BINARY_TEMPORAL):
        return '({} {}{} {})'.format(toText(f.left), _KEYWORD_OF[type(f)], f.interval, toText(f.right))
    if isinstance(f, _UNARY_TEMPORAL):
        return '({}{} {})'.format(_KEYWORD_OF[type(f)], f.interval, toText(f.arg))
    raise InputError("cannot print {!r}".format(f))


#%% Normal forms
def _pnf(f, negate):
    if isinstance(f, Top):
        return Bot() if negate else f
    if isinstance(f, Bot):
        return Top() if negate else f
    if isinstance(f, Atom):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return _pnf(f.arg, not negate)
    if isinstance(f, And):
        cls = Or if negate else And
        return cls(_pnf(f.left, negate), _pnf(f.right, negate))
    if isinstance(f, Or):
        cls = And if negate else Or
        return cls(_pnf(f.left, negate), _pnf(f.right, negate))
    if isinstance(f, _BINARY_TEMPORAL):
        dual = {Until: Release, Release: Until, Since: Trigger, Trigger: Since}
        cls = dual[type(f)] if negate else type(f)
        return cls(_pnf(f.left, negate), f.interval, _pnf(f.right, negate))
    if isinstance(f, _UNARY_TEMPORAL):
        dual = {FutureEventually: FutureAlways, FutureAlways: FutureEventually,
                PastEventually: PastAlways, PastAlways: PastEventually}
        cls = dual[type(f)] if negate else type(f)
        return cls(f.interval, _pnf(f.arg, negate))
    raise InputError("not a formula: {!r}".format(f))


def toPositiveNormalForm(f):
    '''Pushes every negation down to the atoms using the operator dualities.'''
    return _pnf(f, False)


def _neg(f):
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def canonicalize(f):
    '''Reduces the derived operators to Top, Atom, Not, And, Until and Since.'''
    if isinstance(f, (Top, Atom)):
        return f
    if isinstance(f, Bot):
        return Not(Top())
    if isinstance(f, Not):
        return Not(canonicalize(f.arg))
    if isinstance(f, And):
        return And(canonicalize(f.left), canonicalize(f.right))
    if isinstance(f, Or):
        return Not(And(Not(canonicalize(f.left)), Not(canonicalize(f.right))))
    if isinstance(f, (Until, Since)):
        return type(f)(canonicalize(f.left), f.interval, canonicalize(f.right))
    if isinstance(f, Release):
        return Not(Until(Not(canonicalize(f.left)), f.interval, Not(canonicalize(f.right))))
    if isinstance(f, Trigger):
        return Not(Since(Not(canonicalize(f.left)), f.interval, Not(canonicalize(f.right))))
    if isinstance(f, FutureEventually):
        return Until(Top(), f.interval, canonicalize(f.arg))
    if isinstance(f, PastEventually):
        return Since(Top(), f.interval, canonicalize(f.arg))
    if isinstance(f, FutureAlways):
        return Not(Until(Top(), f.interval, Not(canonicalize(f.arg))))
    if isinstance(f, PastAlways):
        return Not(Since(Top(), f.interval, Not(canonicalize(f.arg))))
    raise InputError("not a formula: {!r}".format(f))


def _checkSupported(interval, f):
    if interval.lower != 0:
        raise UnsupportedInterval("interval {} in {} has a nonzero lower bound".format(interval, toText(f)))
    if interval.bounded and not interval.upperOpen:
        raise UnsupportedInterval("interval {} in {} is closed at its finite upper bound".format(interval, toText(f)))


def _orBase(a, b):
    return Not(And(_neg(a), _neg(b)))


def _eventuallyBase(interval, arg, past, original):
    _checkSupported(interval, original)
    if interval.bounded:
        cls = PastEventually if past else FutureEventually
        core = cls(openInterval(interval.upper), arg)
    else:
        cls = Since if past else Until
        core = cls(Top(), OPEN_INF, arg)
    if not interval.lowerOpen:
        return _orBase(arg, core)
    return core


def _untilBase(left, interval, right, past, original):
    _checkSupported(interval, original)
    cls = Since if past else Until
    core = cls(left, OPEN_INF, right)
    if interval.bounded:
        bounded = (PastEventually if past else FutureEventually)(openInterval(interval.upper), right)
        core = And(core, bounded)
    if not interval.lowerOpen:
        return _orBase(right, core)
    return core


def rewriteToBase(f):
    '''
    Rewrites f into the operator base the transducer library implements:
    Top, Atom, Not, And, U_(0,inf), S_(0,inf), F_(0,b) and O_(0,b).
    Intervals closed at zero add an instantaneous disjunct; bounded Until/Since split into
    the unbounded operator and a bounded eventually.
    '''
    if isinstance(f, (Top, Atom)):
        return f
    if isinstance(f, Bot):
        return Not(Top())
    if isinstance(f, Not):
        return _neg(rewriteToBase(f.arg))
    if isinstance(f, And):
        return And(rewriteToBase(f.left), rewriteToBase(f.right))
    if isinstance(f, Or):
        return _orBase(rewriteToBase(f.left), rewriteToBase(f.right))
    if isinstance(f, (FutureEventually, PastEventually)):
        return _eventuallyBase(f.interval, rewriteToBase(f.arg), isinstance(f, PastEventually), f)
    if isinstance(f, (FutureAlways, PastAlways)):
        past = isinstance(f, PastAlways)
        return _neg(_eventuallyBase(f.interval, _neg(rewriteToBase(f.arg)), past, f))
    if isinstance(f, (Until, Since)):
        return _untilBase(rewriteToBase(f.left), f.interval, rewriteToBase(f.right), isinstance(f, Since), f)
    if isinstance(f, (Release, Trigger)):
        past = isinstance(f, Trigger)
        return _neg(_untilBase(_neg(rewriteToBase(f.left)), f.interval, _neg(rewriteToBase(f.right)), past, f))
    raise InputError("not a formula: {!r}".format(f))


def isBaseForm(f):
    if isinstance(f, (Top, Atom)):
        return True
    if isinstance(f, Not):
        return isBaseForm(f.arg)
    if isinstance(f, And):
        return isBaseForm(f.left) and isBaseForm(f.right)
    if isinstance(f, (Until, Since)):
        return f.interval == OPEN_INF and isBaseForm(f.left) and isBaseForm(f.right)
    if isinstance(f, (FutureEventually, PastEventually)):
        i = f.interval
        return i.lower == 0 and i.lowerOpen and i.bounded and i.upperOpen and isBaseForm(f.arg)
    return False


#%% Boolean signals
class BooleanSignal(object):
    '''
    Piecewise-constant dense-time signal over a set of propositions.
    breakpoints 0 = t0 < t1 < ... < tk = horizon; pointValues[i] holds at ti and
    intervalValues[i] on (ti, ti+1). With a lasso (prefixEnd, period) the part on
    [prefixEnd, horizon) repeats forever, which requires horizon = prefixEnd + period.
    '''

    def __init__(self, breakpoints, pointValues, intervalValues, lasso = None):
        breakpoints = [toRational(b) for b in breakpoints]
        ##
        # Error Handling
        ##
        if len(breakpoints) < 2 or breakpoints[0] != 0:
            raise InputError("a signal needs breakpoints starting at 0 and a positive horizon")
        if any(b2 <= b1 for b1, b2 in zip(breakpoints, breakpoints[1:])):
            raise InputError("signal breakpoints must be strictly increasing")
        if len(pointValues) != len(breakpoints) - 1 or len(intervalValues) != len(breakpoints) - 1:
            raise InputError("a signal needs one point and one interval valuation per segment")
        props = set(pointValues[0])
        for values in list(pointValues) + list(intervalValues):
            if set(values) != props:
                raise InputError("every segment must value the same propositions")
        if lasso is not None:
            prefixEnd, period = toRational(lasso[0]), toRational(lasso[1])
            if period <= 0 or prefixEnd + period != breakpoints[-1] or prefixEnd not in breakpoints:
                raise InputError("lasso ({}, {}) does not match the signal horizon {}".format(prefixEnd, period, breakpoints[-1]))
            lasso = (prefixEnd, period)
        self.breakpoints = breakpoints
        self.pointValues = [dict(v) for v in pointValues]
        self.intervalValues = [dict(v) for v in intervalValues]
        self.lasso = lasso
        self.propositions = sorted(props)

    @classmethod
    def fromTruth(cls, horizon, truth, lasso = None, propositions = None):
        '''
        Parameters
        ----------------
         horizon - (rational) end of the described stretch; equals prefixEnd + period with a lasso
         truth - (dict) proposition -> list of (lo, hi, loClosed, hiClosed) stretches where it is true;
                 a point is written (t, t, True, True)
         lasso - (tuple or None) (prefixEnd, period)
         propositions - (list) extra propositions that are false everywhere
        '''
        horizon = toRational(horizon)
        props = sorted(set(truth) | set(propositions or []))
        stretches = {p: [(toRational(a), toRational(b), lc, hc) for a, b, lc, hc in truth.get(p, [])] for p in props}
        cuts = {Fraction(0), horizon}
        if lasso is not None:
            cuts.add(toRational(lasso[0]))
        for p in props:
            for a, b, lc, hc in stretches[p]:
                cuts.update(x for x in (a, b) if 0 < x < horizon)
        breakpoints = sorted(cuts)

        def holds(p, t):
            return any((a < t < b) or (t == a and lc) or (t == b and hc) for a, b, lc, hc in stretches[p])

        points = [{p: holds(p, t) for p in props} for t in breakpoints[:-1]]
        middles = [{p: holds(p, (a + b) / 2) for p in props} for a, b in zip(breakpoints, breakpoints[1:])]
        return cls(breakpoints, points, middles, lasso)

    @property
    def horizon(self):
        return self.breakpoints[-1]

    def _local(self, t):
        t = toRational(t)
        if t < 0:
            raise InsufficientHorizon("time {} is negative".format(t))
        if t >= self.horizon:
            if self.lasso is None:
                raise InsufficientHorizon("time {} is beyond the signal horizon {}".format(t, self.horizon))
            prefixEnd, period = self.lasso
            t = prefixEnd + (t - prefixEnd) % period
        return t

    def valueAt(self, prop, t):
        t = self._local(t)
        i = bisect_right(self.breakpoints, t) - 1
        values = self.pointValues[i] if self.breakpoints[i] == t else self.intervalValues[i]
        if prop not in values:
            raise UnknownSymbol("signal has no proposition '{}'".format(prop))
        return values[prop]

    def segments(self):
        '''Yields (start, end, isPoint, values) over [0, horizon).'''
        for i in range(len(self.breakpoints) - 1):
            yield self.breakpoints[i], self.breakpoints[i], True, self.pointValues[i]
            yield self.breakpoints[i], self.breakpoints[i + 1], False, self.intervalValues[i]

    def toFrame(self):
        rows = []
        for start, end, isPoint, values in self.segments():
            row = {'t_start': float(start), 't_end': float(end), 'kind': 'point' if isPoint else 'open'}
            row.update({p: bool(values[p]) for p in self.propositions})
            rows.append(row)
        return pd.DataFrame(rows)

    def _atom(self, prop):
        if prop not in self.propositions:
            raise UnknownSymbol("signal has no proposition '{}'".format(prop))
        pts = [v[prop] for v in self.pointValues]
        ivs = [v[prop] for v in self.intervalValues]
        if self.lasso is None:
            return _Sig(self.breakpoints, pts, ivs)
        return _Sig(self.breakpoints, pts, ivs, self.lasso[0], self.lasso[1])


#%% Monitor internals
class _Sig(object):
    '''Satisfaction signal of one subformula; see BooleanSignal for the layout.'''
    __slots__ = ('bp', 'pts', 'ivs', 'start', 'period')

    def __init__(self, bp, pts, ivs, start = None, period = None):
        self.bp = list(bp)
        self.pts = list(pts)
        self.ivs = list(ivs)
        self.start = start
        self.period = period

    @property
    def end(self):
        return self.bp[-1]

    @property
    def periodic(self):
        return self.period is not None

    def valueAt(self, t):
        if t >= self.end:
            if not self.periodic:
                raise InsufficientHorizon("the signal does not cover time {} (coverage ends at {})".format(t, self.end))
            t = self.start + (t - self.start) % self.period
        if t < 0:
            raise InsufficientHorizon("time {} is negative".format(t))
        i = bisect_right(self.bp, t) - 1
        return self.pts[i] if self.bp[i] == t else self.ivs[i]

    def forward(self, t):
        '''Segments (lo, hi, isPoint, value) in absolute time from the one containing t onwards.'''
        offset = Fraction(0)
        local = t
        if self.periodic and t >= self.end:
            k = (t - self.start) // self.period
            offset = k * self.period
            local = t - offset
        elif t >= self.end:
            return
        i = bisect_right(self.bp, local) - 1
        first = True
        last = len(self.bp) - 1
        while True:
            while i < last:
                if not (first and self.bp[i] < local):
                    yield self.bp[i] + offset, self.bp[i] + offset, True, self.pts[i]
                first = False
                yield self.bp[i] + offset, self.bp[i + 1] + offset, False, self.ivs[i]
                i += 1
            if not self.periodic:
                return
            offset += self.period
            i = self.bp.index(self.start)

    def unrolled(self, upto):
        '''Finite copy of the signal covering at least [0, upto].'''
        if not self.periodic or self.end >= upto:
            return self
        bp, pts, ivs = list(self.bp), list(self.pts), list(self.ivs)
        s = self.bp.index(self.start)
        offset = self.period
        while bp[-1] < upto:
            for i in range(s, len(self.bp) - 1):
                pts.append(self.pts[i])
                ivs.append(self.ivs[i])
                bp.append(self.bp[i + 1] + offset)
            offset += self.period
        return _Sig(bp, pts, ivs)

    def backward(self, t):
        '''Segments strictly before t, nearest first, clipped at t.'''
        sig = self.unrolled(t)
        i = bisect_right(sig.bp, t) - 1
        if sig.bp[i] < t:
            yield sig.bp[i], t, False, sig.ivs[i]
            yield sig.bp[i], sig.bp[i], True, sig.pts[i]
        i -= 1
        while i >= 0:
            yield sig.bp[i], sig.bp[i + 1], False, sig.ivs[i]
            yield sig.bp[i], sig.bp[i], True, sig.pts[i]
            i -= 1


def _rationalLcm(p, q):
    return Fraction(lcm(p.numerator * q.denominator, q.numerator * p.denominator), p.denominator * q.denominator)


def _maxBound(bounds):
    '''(value, closed) with the largest value; closed only if every tied bound is closed.'''
    top = max(v for v, c in bounds)
    return top, all(c for v, c in bounds if v == top)


def _minBound(bounds):
    low = min(v for v, c in bounds)
    return low, all(c for v, c in bounds if v == low)


def _existsTrue(sig, lo, loClosed, hi, hiClosed):
    '''Is sig true somewhere in the window from lo to hi (hi None means unbounded)?'''
    if hi is not None and (hi < lo or (hi == lo and not (loClosed and hiClosed))):
        return False
    stop = None
    if hi is None:
        stop = max(lo, sig.start) + sig.period
    for segLo, segHi, isPoint, value in sig.forward(lo):
        if hi is not None and segLo > hi:
            break
        if stop is not None and segLo > stop:
            break
        if not value:
            continue
        if isPoint:
            x = segLo
            if (x > lo or (x == lo and loClosed)) and (hi is None or x < hi or (x == hi and hiClosed)):
                return True
        else:
            a = max(segLo, lo)
            c = segHi if hi is None else min(segHi, hi)
            if a < c:
                return True
            if a == c and segLo < a < segHi and lo == hi:
                return True
    return False


def _untilAt(a, b, interval, t):
    horizon = None
    if interval.bounded:
        horizon = t + interval.upper
    elif a.periodic:
        horizon = max(t, a.start) + a.period
    firstFalse = None
    for segLo, segHi, isPoint, value in a.forward(t):
        if isPoint and segLo == t:
            continue
        if horizon is not None and segLo > horizon:
            break
        if not value:
            firstFalse = max(segLo, t)
            break
    lower = (t + interval.lower, not interval.lowerOpen)
    uppers = []
    if interval.bounded:
        uppers.append((t + interval.upper, not interval.upperOpen))
    if firstFalse is not None:
        uppers.append((firstFalse, True))
    if uppers:
        hi, hiClosed = _minBound(uppers)
        return _existsTrue(b, lower[0], lower[1], hi, hiClosed)
    return _existsTrue(b, lower[0], lower[1], None, False)


def _sinceAt(a, b, interval, t):
    lastFalse = None
    for segLo, segHi, isPoint, value in a.backward(t):
        if not value:
            lastFalse = segLo if isPoint else segHi
            break
    hi = t - interval.lower
    hiClosed = not interval.lowerOpen
    if hi < 0:
        return False
    lowers = [(Fraction(0), True)]
    if lastFalse is not None:
        lowers.append((lastFalse, True))
    if interval.bounded:
        lowers.append((t - interval.upper, not interval.upperOpen))
    lo, loClosed = _maxBound(lowers)
    return _existsTrue(b, lo, loClosed, hi, hiClosed)


class _Monitor(object):

    def __init__(self, signal):
        self.signal = signal
        self.cache = {}

    def sig(self, f):
        if f not in self.cache:
            self.cache[f] = self._build(f)
        return self.cache[f]

    def _top(self):
        s = self.signal
        if s.lasso is None:
            return _Sig([Fraction(0), s.horizon], [True], [True])
        return _Sig([Fraction(0), s.lasso[1]], [True], [True], Fraction(0), s.lasso[1])

    def _build(self, f):
        if isinstance(f, Top):
            return self._top()
        if isinstance(f, Atom):
            return self.signal._atom(f.name)
        if isinstance(f, Not):
            child = self.sig(f.arg)
            return _Sig(child.bp, [not v for v in child.pts], [not v for v in child.ivs], child.start, child.period)
        if isinstance(f, And):
            left, right = self.sig(f.left), self.sig(f.right)
            return self._combine([left, right], lambda t: left.valueAt(t) and right.valueAt(t), 'bool', None)
        if isinstance(f, Until):
            left, right = self.sig(f.left), self.sig(f.right)
            return self._combine([left, right], lambda t: _untilAt(left, right, f.interval, t), 'future', f.interval)
        if isinstance(f, Since):
            left, right = self.sig(f.left), self.sig(f.right)
            return self._combine([left, right], lambda t: _sinceAt(left, right, f.interval, t), 'past', f.interval)
        raise InputError("monitor expects canonical formulas, got {!r}".format(f))

    def _combine(self, kids, valueAt, kind, interval):
        if any(len(k.bp) < 2 for k in kids):
            return _Sig([Fraction(0)], [], [])
        periodic = all(k.periodic for k in kids)
        if periodic:
            period = kids[0].period
            for k in kids[1:]:
                period = _rationalLcm(period, k.period)
            start = max(k.start for k in kids)
            if kind == 'past':
                start += interval.upper if interval.bounded else interval.lower + period
            end = start + period
        else:
            start = period = None
            end = min(k.end for k in kids if not k.periodic)
            if kind == 'future':
                end = end - interval.upper if interval.bounded else Fraction(0)
            if end <= 0:
                return _Sig([Fraction(0)], [], [])
        reach = end
        if kind == 'future':
            reach = end + (interval.upper if interval.bounded else interval.lower)
        cuts = {Fraction(0), end}
        if start is not None:
            cuts.add(start)
        for k in kids:
            for x in k.unrolled(reach).bp:
                if x > reach:
                    break
                cuts.add(x)
                if kind == 'future':
                    cuts.add(x - interval.lower)
                    if interval.bounded:
                        cuts.add(x - interval.upper)
                elif kind == 'past':
                    cuts.add(x + interval.lower)
                    if interval.bounded:
                        cuts.add(x + interval.upper)
        bp = sorted(c for c in cuts if 0 <= c <= end)
        pts = [valueAt(t) for t in bp[:-1]]
        ivs = [valueAt((t1 + t2) / 2) for t1, t2 in zip(bp, bp[1:])]
        return _compress(_Sig(bp, pts, ivs, start, period))


def _compress(sig):
    keep = {sig.start} if sig.periodic else set()
    bp, pts, ivs = [sig.bp[0]], [sig.pts[0]], [sig.ivs[0]]
    for i in range(1, len(sig.bp) - 1):
        if sig.bp[i] not in keep and sig.pts[i] == ivs[-1] and sig.ivs[i] == ivs[-1]:
            continue
        bp.append(sig.bp[i])
        pts.append(sig.pts[i])
        ivs.append(sig.ivs[i])
    bp.append(sig.bp[-1])
    return _Sig(bp, pts, ivs, sig.start, sig.period)


def evaluate(f, d, t = 0):
    '''
    Parameters
    ----------------
     f - (Formula) any formula; atoms are read from the signal
     d - (BooleanSignal) finite signal, or lasso signal for unbounded operators
     t - (rational) evaluation time

    Returns
    ----------------
     truth value of f at t under the dense-time semantics
    '''
    t = toRational(t)
    monitor = _Monitor(d)
    return monitor.sig(canonicalize(f)).valueAt(t)


def satisfactionSignal(f, d):
    '''The satisfaction signal of f over d as a BooleanSignal over the single proposition 'sat'.'''
    sig = _Monitor(d).sig(canonicalize(f))
    if len(sig.bp) < 2:
        raise InsufficientHorizon("the signal is too short to decide {}".format(toText(f)))
    lasso = (sig.start, sig.period) if sig.periodic else None
    return BooleanSignal(sig.bp, [{'sat': v} for v in sig.pts], [{'sat': v} for v in sig.ivs], lasso)
