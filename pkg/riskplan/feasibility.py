# -*- coding: utf-8 -*-
"""
Name: feasibility.py
Last Updated: 10/18/2026

Existence and implication questions over conjunctions of deterministic
predicate literals inside the workspace box.
A literal cube is a frozenset of (proposition, value) pairs; predicate
propositions are read through the symbol table, uncontrollable propositions
are compared with an event assignment s.
Affine cubes are decided exactly by Fourier-Motzkin elimination over
Fractions; cubes with ball predicates are decided on a sampling grid.
"""
import logging
import threading
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np
import sympy
from sympy.logic.inference import satisfiable

from riskplan.errors import InputError, DimensionTooLarge
from riskplan import formula as fm
from riskplan.risk import Affine, BallOut

logger = logging.getLogger(__name__)

# bracket length at which ray bisection stops
BOUNDARY_TOLERANCE = 1e-4


#%% Cubes
def makeCube(assignment):
    return frozenset(dict(assignment).items())


TRUE_CUBE = frozenset()


def mergeCubes(a, b):
    '''Conjunction of two cubes, or None when they disagree on some literal.'''
    merged = dict(a)
    for name, value in b:
        if merged.get(name, value) != value:
            return None
        merged[name] = value
    return frozenset(merged.items())


def cubeText(cube):
    return ' & '.join(name if value else '!' + name for name, value in sorted(cube)) or 'top'


def restrictCube(cube, names):
    return frozenset((n, v) for n, v in cube if n in names)


def cubeFormula(cube):
    '''The cube as a conjunction of literals.'''
    result = None
    for name, value in sorted(cube):
        literal = fm.Atom(name) if value else fm.Not(fm.Atom(name))
        result = literal if result is None else fm.And(result, literal)
    return result if result is not None else fm.Top()


#%% DNF
def _toSympy(f, symbols):
    if isinstance(f, fm.Top):
        return sympy.true
    if isinstance(f, fm.Bot):
        return sympy.false
    if isinstance(f, fm.Atom):
        if f.name not in symbols:
            symbols[f.name] = sympy.Symbol(f.name)
        return symbols[f.name]
    if isinstance(f, fm.Not):
        return sympy.Not(_toSympy(f.arg, symbols))
    if isinstance(f, fm.And):
        return sympy.And(_toSympy(f.left, symbols), _toSympy(f.right, symbols))
    if isinstance(f, fm.Or):
        return sympy.Or(_toSympy(f.left, symbols), _toSympy(f.right, symbols))
    raise InputError("labels are Boolean formulas, got {}".format(fm.toText(f)))


def dnfExpand(label):
    '''
    Parameters
    ----------------
     label - (Formula) Boolean combination of atoms

    Returns
    ----------------
     list of pairwise disjoint cubes, each fixing every atom of the label, whose union is the label
    '''
    names = sorted(fm.atoms(label))
    symbols = {}
    expr = _toSympy(label, symbols)
    if expr == sympy.false:
        return []
    if expr == sympy.true:
        models = [{}]
    else:
        models = []
        for model in satisfiable(expr, all_models=True):
            if model is False:
                return []
            models.append({str(k): bool(v) for k, v in model.items()})
    cubes = []
    for model in models:
        missing = [n for n in names if n not in model]
        for values in product((False, True), repeat=len(missing)):
            full = dict(model)
            full.update(zip(missing, values))
            cubes.append(makeCube(full))
    return sorted(set(cubes), key=lambda c: sorted(c))


#%% Fourier-Motzkin
def _eliminate(rows, col):
    '''
    rows are (a, b, strict) meaning a.x <= b (or < b); returns rows without variable col.
    '''
    z, p, n = [], [], []
    for row in rows:
        coeff = row[0][col]
        (z if coeff == 0 else p if coeff > 0 else n).append(row)
    out = list(z)
    for ap, bp, sp in p:
        for an, bn, sn in n:
            lp, ln = -an[col], ap[col]
            a = tuple(lp * x + ln * y for x, y in zip(ap, an))
            out.append((a, lp * bp + ln * bn, sp or sn))
    return _dedupe(out)


def _dedupe(rows):
    seen = {}
    for a, b, strict in rows:
        key = a
        if key not in seen:
            seen[key] = (b, strict)
        else:
            b0, s0 = seen[key]
            if b < b0 or (b == b0 and strict):
                seen[key] = (b, strict)
    return [(a, b, s) for a, (b, s) in seen.items()]


def _trivialOk(rows):
    return all(b > 0 or (b == 0 and not strict) for a, b, strict in rows if not any(a))


def fourierMotzkin(rows, dim):
    '''
    Parameters
    ----------------
     rows - list of (coefficients, bound, strict) meaning a.x <= bound, or < bound when strict
     dim - number of variables

    Returns
    ----------------
     a witness point as a tuple of Fractions, or None when the system is infeasible
    '''
    stages = [rows]
    for col in range(dim - 1, -1, -1):
        if not _trivialOk(stages[-1]):
            return None
        stages.append(_eliminate(stages[-1], col))
    if not _trivialOk(stages[-1]):
        return None
    point = [Fraction(0)] * dim
    for col in range(dim):
        stage = stages[dim - col - 1]
        lower, upper = None, None
        for a, b, strict in stage:
            coeff = a[col]
            if coeff == 0:
                continue
            rest = sum(a[k] * point[k] for k in range(col))
            bound = (b - rest) / coeff
            if coeff > 0:
                if upper is None or bound < upper[0] or (bound == upper[0] and strict):
                    upper = (bound, strict)
            else:
                if lower is None or bound > lower[0] or (bound == lower[0] and strict):
                    lower = (bound, strict)
        if lower is None and upper is None:
            value = Fraction(0)
        elif lower is None:
            value = upper[0] - 1
        elif upper is None:
            value = lower[0] + 1
        elif lower[0] == upper[0]:
            if lower[1] or upper[1]:
                return None
            value = lower[0]
        elif lower[0] > upper[0]:
            return None
        else:
            value = (lower[0] + upper[0]) / 2
        point[col] = value
    return tuple(point)


#%% Oracle
@dataclass
class FeasibilityResult:
    sat: bool
    witness: np.ndarray = None
    exact: bool = True

    def __bool__(self):
        return self.sat


UNSAT = FeasibilityResult(False)


class FeasibilityOracle(object):
    '''
    Decides exists-x and forall-x questions over literal cubes.

    Parameters
    ----------------
     table - (SymbolTable) with DeterministicPredicate payloads
     ws - (Workspace) the box the state lives in
     mean - (array) the mean of the uncertainty, plugged into every predicate
     gridResolution - (int) points per axis of the sampling grid
     maxGridDim - (int) largest state dimension the grid fallback accepts
     samples - (int) random points used to falsify implications
     seed - (int) seed of those random points
     rays - (int) seeded rays per predicate bisected onto its boundary
    '''

    def __init__(self, table, ws, mean, gridResolution = 200, maxGridDim = 3, samples = 10000, seed = 0, rays = 256):
        self.table = table
        self.ws = ws
        self.mean = np.asarray(mean, dtype=float)
        self.gridResolution = gridResolution
        self.maxGridDim = maxGridDim
        self.samples = samples
        self.seed = seed
        self.rays = rays
        self.predicates = {table.propOf(s): table.payloadOf(s) for s in table.predicates()}
        self.uncontrollables = set(table.uncontrollables())
        self._memo = {}
        self._implies = {}
        self._room = {}
        self._uniform = None
        self._lock = threading.Lock()
        self._grid = None
        self._special = None
        self._boundary = None

    ##
    # Literal helpers
    ##
    def predicatePart(self, cube):
        return frozenset((n, v) for n, v in cube if n in self.predicates)

    def eventPart(self, cube):
        return frozenset((n, v) for n, v in cube if n in self.uncontrollables)

    def _affineOnly(self, cube):
        return all(isinstance(self.predicates[n].h, Affine) for n, v in cube)

    def _rows(self, cube):
        '''Literal cube and box as rows a.x <= b over Fractions.'''
        dim = self.ws.dim
        rows = []
        for k in range(dim):
            unit = tuple(Fraction(1) if j == k else Fraction(0) for j in range(dim))
            neg = tuple(-x for x in unit)
            rows.append((unit, fm.toRational(float(self.ws.hi[k])), False))
            rows.append((neg, -fm.toRational(float(self.ws.lo[k])), False))
        for name, value in sorted(cube):
            pred = self.predicates[name]
            v = tuple(fm.toRational(float(x)) for x in pred.h.v)
            offset = fm.toRational(float(np.asarray(pred.h.w) @ self.mean + pred.h.b))
            bound = fm.toRational(float(pred.c)) - offset
            # true literal: v.x >= bound (or <= when negated); false literal is the strict complement
            upperSide = pred.negated == value
            if upperSide:
                rows.append((v, bound, not value))
            else:
                rows.append((tuple(-x for x in v), -bound, not value))
        return rows

    def values(self, xs, names = None):
        '''Signed margins per proposition (>= 0 means true) at every row of xs.'''
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        names = names if names is not None else list(self.predicates)
        return {n: self.predicates[n].values(xs, self.mean) for n in names}

    def satisfiesAt(self, cube, xs):
        '''Boolean mask of the rows of xs satisfying the predicate literals of cube.'''
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        mask = np.ones(len(xs), dtype=bool)
        for name, value in self.predicatePart(cube):
            margin = self.predicates[name].values(xs, self.mean)
            mask &= (margin >= 0) if value else (margin < 0)
        return mask

    def labelAt(self, x):
        '''The predicate valuation at a point.'''
        return {n: bool(m[0] >= 0) for n, m in self.values(x).items()}

    ##
    # Sampling grid
    ##
    def _gridPoints(self):
        if self._grid is None:
            n = self.ws.dim
            if n > self.maxGridDim:
                raise DimensionTooLarge("grid sampling supports up to {} dimensions, got {}".format(self.maxGridDim, n))
            res = min(self.gridResolution, int(round(4.0e6 ** (1.0 / n))))
            axes = [np.linspace(lo, hi, res) for lo, hi in zip(self.ws.lo, self.ws.hi)]
            mesh = np.meshgrid(*axes, indexing='ij')
            self._grid = np.stack([m.reshape(-1) for m in mesh], axis=1)
        return self._grid

    def _specialPoints(self):
        '''Ball centres and points just inside and outside every ball boundary.'''
        if self._special is None:
            points = []
            rng = np.random.default_rng(self.seed)
            n = self.ws.dim
            dirs = rng.normal(size=(64, n))
            dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
            for pred in self.predicates.values():
                if isinstance(pred.h, Affine):
                    continue
                center = self.mean[list(pred.h.idx)]
                sq = pred.h.eps + pred.c if isinstance(pred.h, BallOut) else pred.h.eps - pred.c
                points.append(center.reshape(1, -1))
                if sq > 0:
                    for scale in (0.999, 1.001):
                        points.append(center + scale * np.sqrt(sq) * dirs)
            if points:
                special = np.vstack(points)
                self._special = special[self.ws.contains(special)]
            else:
                self._special = np.zeros((0, self.ws.dim))
        return self._special

    def _boundaryPoints(self):
        '''
        Points just on either side of every predicate boundary: seeded rays whose ends
        disagree on a predicate are bisected until the bracket is shorter than BOUNDARY_TOLERANCE.
        '''
        if self._boundary is None:
            rng = np.random.default_rng(self.seed + 1)
            n = self.ws.dim
            span = self.ws.hi - self.ws.lo
            reach = float(np.linalg.norm(span))
            anchors = self.ws.lo + rng.random((self.rays, n)) * span
            found = [np.zeros((0, n))]
            for name in sorted(self.predicates):
                pred = self.predicates[name]
                starts = anchors
                if not isinstance(pred.h, Affine):
                    center = np.clip(self.mean[list(pred.h.idx)], self.ws.lo, self.ws.hi)
                    starts = np.vstack([anchors, np.repeat(center.reshape(1, -1), self.rays // 4, axis=0)])
                dirs = rng.normal(size=starts.shape)
                dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
                ends = np.clip(starts + reach * dirs, self.ws.lo, self.ws.hi)
                side = pred.values(starts, self.mean) >= 0
                crossing = side != (pred.values(ends, self.mean) >= 0)
                left, right, side = starts[crossing], ends[crossing], side[crossing]
                while len(left) and np.max(np.linalg.norm(right - left, axis=1)) > BOUNDARY_TOLERANCE:
                    mid = (left + right) / 2
                    same = (pred.values(mid, self.mean) >= 0) == side
                    left = np.where(same[:, None], mid, left)
                    right = np.where(same[:, None], right, mid)
                found += [left, right]
            self._boundary = np.vstack(found)
        return self._boundary

    def _uniformPoints(self):
        if self._uniform is None:
            rng = np.random.default_rng(self.seed)
            self._uniform = self.ws.lo + rng.random((self.samples, self.ws.dim)) * (self.ws.hi - self.ws.lo)
        return self._uniform

    def room(self, cube):
        '''Share of the workspace, estimated on seeded uniform points, where the predicate literals of cube hold.'''
        preds = self.predicatePart(cube)
        if not preds:
            return 1.0
        with self._lock:
            if preds in self._room:
                return self._room[preds]
        share = float(np.mean(self.satisfiesAt(preds, self._uniformPoints())))
        with self._lock:
            self._room[preds] = share
        return share

    def _sampleSat(self, cube):
        for points in (self._gridPoints(), self._specialPoints(), self._boundaryPoints()):
            if len(points) == 0:
                continue
            hits = points[self.satisfiesAt(cube, points)]
            if len(hits):
                order = np.lexsort(hits.T[::-1])
                return FeasibilityResult(True, hits[order[0]], exact=False)
        return FeasibilityResult(False, exact=False)

    ##
    # Public questions
    ##
    def existsX(self, cube, s = None):
        '''
        Parameters
        ----------------
         cube - literal cube over predicate and uncontrollable propositions
         s - (dict or None) event assignment compared with the cube's uncontrollable literals

        Returns
        ----------------
         FeasibilityResult; sat with a witness point when some x in the box satisfies the cube
        '''
        if s is not None:
            for name, value in self.eventPart(cube):
                if s.get(name, False) != value:
                    return UNSAT
        preds = self.predicatePart(cube)
        with self._lock:
            if preds in self._memo:
                return self._memo[preds]
        if not preds:
            result = FeasibilityResult(True, (self.ws.lo + self.ws.hi) / 2)
        elif self._affineOnly(preds):
            point = fourierMotzkin(self._rows(preds), self.ws.dim)
            result = FeasibilityResult(point is not None, None if point is None else np.array([float(p) for p in point]))
        else:
            result = self._sampleSat(preds)
        with self._lock:
            self._memo[preds] = result
        return result

    def forallImplies(self, antecedent, consequent):
        '''
        True when every x satisfying the antecedent's predicate literals satisfies the consequent's.
        Uncontrollable literals of the consequent must already be fixed the same way by the antecedent.
        '''
        events = dict(self.eventPart(antecedent))
        for name, value in self.eventPart(consequent):
            if events.get(name) != value:
                return False
        ante, cons = self.predicatePart(antecedent), self.predicatePart(consequent)
        missing = cons - ante
        if not missing:
            return True
        key = (ante, missing)
        with self._lock:
            if key in self._implies:
                return self._implies[key]
        if mergeCubes(ante, cons) is None:
            answer = not self.existsX(ante)
        elif self._affineOnly(ante | missing):
            answer = not any(self.existsX(mergeCubes(ante, {(n, not v)})) for n, v in missing)
        else:
            answer = self._sampleImplies(ante, missing)
        with self._lock:
            self._implies[key] = answer
        return answer

    def _sampleImplies(self, ante, missing):
        for points in (self._gridPoints(), self._specialPoints(), self._boundaryPoints(), self._uniformPoints()):
            if len(points) == 0:
                continue
            inside = points[self.satisfiesAt(ante, points)]
            if len(inside) and not np.all(self.satisfiesAt(missing, inside)):
                return False
        logger.info("implication decided by sampling", extra={'event': 'oracle', 'approximate': True,
                                                               'antecedent': cubeText(ante), 'consequent': cubeText(missing)})
        return True
