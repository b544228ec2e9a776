# -*- coding: utf-8 -*-
"""
Name: risk.py
Last Updated: 10/18/2026

Risk measures of Gaussian-uncertain predicate functions and the tightening of
risk predicates into deterministic ones.
A risk predicate holds at x when R(-h(x, X)) <= gamma for R in {EV, VaR, CVaR};
its deterministic replacement holds when h(x, mean) >= c. The constant c is
accepted once every point of {h(x, mean) >= c} inside the workspace satisfies
the risk predicate, so any trajectory meeting the deterministic formula meets
the risk formula.
"""
import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import pandas as pd
from scipy import stats
from multiprocessing.dummy import Pool as ThreadPool

from riskplan.errors import (InputError, ClosedFormUnavailable, AssumptionViolated, UnsatisfiableThreshold)
from riskplan import formula as fm

logger = logging.getLogger(__name__)

CLOSED_FORM = 'ClosedForm'
MEASURES = ('EV', 'VaR', 'CVaR')


#%% Domain types
@dataclass(frozen=True, eq=False)
class GaussianVector:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim == 1:
            cov = np.diag(cov)
        ##
        # Error Handling
        ##
        if cov.shape != (len(mean), len(mean)):
            raise InputError("covariance shape {} does not match mean length {}".format(cov.shape, len(mean)))
        if not np.allclose(cov, cov.T):
            raise InputError("covariance must be symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-10:
            raise InputError("covariance must be positive semidefinite")
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'cov', cov)

    @property
    def dim(self):
        return len(self.mean)

    def sample(self, rng, size):
        return rng.multivariate_normal(self.mean, self.cov, size=size, method='eigh')


@dataclass(frozen=True)
class Affine:
    '''h(x, X) = v'x + w'X + b'''
    v: Tuple[float, ...]
    w: Tuple[float, ...]
    b: float = 0.0

    def evaluate(self, xs, Xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
        return (xs @ np.asarray(self.v))[:, None] + (Xs @ np.asarray(self.w))[None, :] + self.b

    def checkDims(self, n, nX):
        if len(self.v) != n or len(self.w) != nX:
            raise InputError("affine predicate expects x of length {} and X of length {}".format(len(self.v), len(self.w)))


@dataclass(frozen=True)
class BallIn:
    '''h(x, X) = eps - ||x - X[idx]||^2'''
    idx: Tuple[int, ...]
    eps: float

    def sqDistance(self, xs, Xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        centers = np.atleast_2d(np.asarray(Xs, dtype=float))[:, list(self.idx)]
        return ((xs[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)

    def evaluate(self, xs, Xs):
        return self.eps - self.sqDistance(xs, Xs)

    def checkDims(self, n, nX):
        if len(self.idx) != n or max(self.idx) >= nX or min(self.idx) < 0:
            raise InputError("ball index {} does not fit x of length {} and X of length {}".format(self.idx, n, nX))
        if self.eps <= 0:
            raise InputError("ball radius parameter must be positive")


@dataclass(frozen=True)
class BallOut(BallIn):
    '''h(x, X) = ||x - X[idx]||^2 - eps'''

    def evaluate(self, xs, Xs):
        return self.sqDistance(xs, Xs) - self.eps


@dataclass(frozen=True)
class RiskSpec:
    measure: str = 'VaR'
    beta: float = 0.9
    gamma: float = 0.0

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise InputError("unknown risk measure '{}'".format(self.measure))
        if not 0 < self.beta < 1:
            raise InputError("beta must lie in (0,1), got {}".format(self.beta))


@dataclass(frozen=True)
class RiskPredicate:
    h: object
    spec: RiskSpec
    c: float = None


@dataclass(frozen=True)
class DeterministicPredicate:
    h: object
    c: float
    negated: bool = False

    def values(self, xs, mean):
        '''h(x, mean) - c for every row of xs (flipped when negated, so >= 0 means true).'''
        raw = self.h.evaluate(xs, mean)[:, 0] - self.c
        return -raw if self.negated else raw

    def holds(self, x, mean):
        return bool(self.values(x, mean)[0] >= 0)


@dataclass(frozen=True, eq=False)
class Workspace:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise InputError("workspace needs lo < hi componentwise")
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, xs, tol = 1e-12):
        xs = np.atleast_2d(xs)
        return np.all((xs >= self.lo - tol) & (xs <= self.hi + tol), axis=1)

    def corners(self):
        grids = np.meshgrid(*[[a, b] for a, b in zip(self.lo, self.hi)], indexing='ij')
        return np.stack([g.reshape(-1) for g in grids], axis=1)


@dataclass(frozen=True)
class MonteCarlo:
    samples: int = 100000
    seed: int = 0xC0FFEE
    batches: int = 20


@dataclass
class InclusionResult:
    holds: bool
    margin: float
    witness: np.ndarray = None
    risk: float = None
    se: float = 0.0
    empty: bool = False
    candidates: int = field(default=0)


#%% Risk measures
def _closedForm(h, xs, X, spec):
    if not isinstance(h, Affine):
        raise ClosedFormUnavailable("closed form risk needs an affine predicate, got {}".format(type(h).__name__))
    m = -(np.atleast_2d(xs) @ np.asarray(h.v)) - float(np.asarray(h.w) @ X.mean) - h.b
    sigma = float(np.sqrt(np.asarray(h.w) @ X.cov @ np.asarray(h.w)))
    if spec.measure == 'EV' or sigma == 0:
        return m
    z = stats.norm.ppf(spec.beta)
    if spec.measure == 'VaR':
        return m + sigma * z
    return m + sigma * stats.norm.pdf(z) / (1 - spec.beta)


def _empirical(losses, spec):
    '''Risk measure along the last axis of a loss array.'''
    if spec.measure == 'EV':
        return losses.mean(axis=-1)
    var = np.quantile(losses, spec.beta, axis=-1)
    if spec.measure == 'VaR':
        return var
    excess = np.maximum(losses - var[..., None], 0.0)
    return var + excess.mean(axis=-1) / (1 - spec.beta)


def _standardError(losses, spec, batches):
    parts = np.array_split(losses, batches)
    stat = np.array([_empirical(p, spec) for p in parts])
    return float(stat.std(ddof=1) / np.sqrt(batches))


def _draws(X, method):
    rng = np.random.default_rng(method.seed)
    return X.sample(rng, method.samples)


def riskEstimate(h, x, X, spec, method = CLOSED_FORM, draws = None):
    '''
    Parameters
    ----------------
     h - predicate function (Affine, BallIn or BallOut)
     x - (array) the point
     X - (GaussianVector) the uncertainty
     spec - (RiskSpec) measure, beta and gamma
     method - CLOSED_FORM or a MonteCarlo configuration
     draws - (array) optional pre-drawn samples of X (common random numbers)

    Returns
    ----------------
     (risk, standard error); the standard error is 0 for the closed form
    '''
    x = np.asarray(x, dtype=float).reshape(1, -1)
    if method == CLOSED_FORM:
        return float(_closedForm(h, x, X, spec)[0]), 0.0
    if draws is None:
        draws = _draws(X, method)
    losses = -h.evaluate(x, draws)[0]
    return float(_empirical(losses, spec)), _standardError(losses, spec, method.batches)


def riskOf(h, x, X, spec, method = CLOSED_FORM):
    return riskEstimate(h, x, X, spec, method)[0]


#%% Worst points of the deterministic sets
def _affineWorst(h, c, negated, ws, X):
    '''
    The risk of an affine predicate only grows as v'x shrinks, so the worst point of
    {h(x, mean) >= c} is the box point minimising v'x on that halfspace (maximising when negated).
    '''
    v = np.asarray(h.v, dtype=float)
    offset = float(np.asarray(h.w) @ X.mean) + h.b
    xMin = np.where(v >= 0, ws.lo, ws.hi)
    xMax = np.where(v >= 0, ws.hi, ws.lo)
    vMin, vMax = float(v @ xMin), float(v @ xMax)
    bound = c - offset
    if not negated:
        if bound > vMax:
            return None
        target = max(vMin, bound)
    else:
        if bound < vMin:
            return None
        target = min(vMax, bound)
    if vMax == vMin:
        return xMin.reshape(1, -1)
    lam = (target - vMin) / (vMax - vMin)
    return (xMin + lam * (xMax - xMin)).reshape(1, -1)


def _ballCandidates(h, c, negated, ws, X, extra = 32, seed = 0):
    '''Points on the boundary sphere of the deterministic set: one fixed direction plus random ones.'''
    center = X.mean[list(h.idx)]
    inside = isinstance(h, BallOut) == negated
    sq = (h.eps + c) if isinstance(h, BallOut) else (h.eps - c)
    nearest = np.clip(center, ws.lo, ws.hi).reshape(1, -1)
    if sq < 0:
        return None if inside else nearest
    radius = np.sqrt(sq)
    n = len(h.idx)
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(extra, n))
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    first = np.zeros((1, n))
    first[0, 0] = 1.0
    points = center + radius * np.vstack([first, dirs])
    points = points[ws.contains(points)]
    if len(points) == 0:
        # sphere misses the box, so the box lies wholly inside or wholly outside the ball
        candidates = np.vstack([ws.corners(), nearest])
        dist = ((candidates - center) ** 2).sum(axis=1)
        points = candidates[dist <= sq] if inside else candidates[dist >= sq]
        if len(points) == 0:
            return None
    return points


def checkInclusion(h, spec, c, negated, ws, X, method = None, draws = None):
    '''
    Parameters
    ----------------
     h - predicate function
     spec - (RiskSpec)
     c - (float) tightening constant
     negated - (bool) check {h <= c} against R(-h) > gamma instead of {h >= c} against R(-h) <= gamma
     ws - (Workspace)
     X - (GaussianVector)
     method - CLOSED_FORM, MonteCarlo or None (closed form for affine, Monte Carlo otherwise)

    Returns
    ----------------
     InclusionResult; holds when the margin is at least -3 standard errors.
     An empty deterministic set is reported with holds=False and empty=True.
    '''
    if method is None:
        method = CLOSED_FORM if isinstance(h, Affine) else MonteCarlo()
    if isinstance(h, Affine):
        points = _affineWorst(h, c, negated, ws, X)
    else:
        if method == CLOSED_FORM:
            raise ClosedFormUnavailable("closed form inclusion is only available for affine predicates")
        points = _ballCandidates(h, c, negated, ws, X)
    if points is None:
        logger.warning("deterministic set of %s is empty at c=%s", h, c)
        return InclusionResult(holds=False, margin=float('-inf'), empty=True)
    if method == CLOSED_FORM:
        risks = _closedForm(h, points, X, spec)
        ses = np.zeros(len(points))
    else:
        if draws is None:
            draws = _draws(X, method)
        losses = -h.evaluate(points, draws)
        risks = _empirical(losses, spec)
        ses = None
    worst = int(np.argmin(risks) if negated else np.argmax(risks))
    risk = float(risks[worst])
    se = 0.0 if ses is not None else _standardError(losses[worst], spec, method.batches)
    margin = (risk - spec.gamma) if negated else (spec.gamma - risk)
    return InclusionResult(holds=bool(margin >= -3 * se), margin=margin, witness=points[worst], risk=risk,
                           se=se, candidates=len(points))


#%% Tightening
def _hRange(h, ws, X):
    '''(inf, sup) of h(., mean) over the workspace.'''
    if isinstance(h, Affine):
        v = np.asarray(h.v, dtype=float)
        offset = float(np.asarray(h.w) @ X.mean) + h.b
        low = float(np.where(v >= 0, ws.lo, ws.hi) @ v) + offset
        high = float(np.where(v >= 0, ws.hi, ws.lo) @ v) + offset
        return low, high
    center = X.mean[list(h.idx)]
    nearest = np.clip(center, ws.lo, ws.hi)
    near = float(((nearest - center) ** 2).sum())
    far = float(((ws.corners() - center) ** 2).sum(axis=1).max())
    if isinstance(h, BallOut):
        return near - h.eps, far - h.eps
    return h.eps - far, h.eps - near


def suggestC(h, spec, negated, ws, X, method = None, tol = 1e-3):
    '''
    Smallest c (largest when negated) for which checkInclusion holds, by bisection.
    Raising c shrinks {h >= c}, so the verdict is monotone in c.
    '''
    if method is None:
        method = CLOSED_FORM if isinstance(h, Affine) else MonteCarlo()
    draws = None if method == CLOSED_FORM else _draws(X, method)
    low, high = _hRange(h, ws, X)

    def ok(c):
        return checkInclusion(h, spec, c, negated, ws, X, method, draws).holds

    loose, tight = (low, high) if not negated else (high, low)
    if ok(loose):
        return loose
    if not ok(tight):
        raise UnsatisfiableThreshold("no tightening constant in [{:.4g}, {:.4g}] satisfies the risk constraint".format(low, high))
    while abs(tight - loose) > tol:
        mid = (loose + tight) / 2
        if ok(mid):
            tight = mid
        else:
            loose = mid
    return tight


def _tightenOne(symbol, pred, negated, ws, X, method):
    result = {'symbol': symbol, 'negated': negated, 'measure': pred.spec.measure, 'beta': pred.spec.beta,
              'gamma': pred.spec.gamma, 'c': pred.c}
    if pred.c is not None:
        check = checkInclusion(pred.h, pred.spec, pred.c, negated, ws, X, method)
        result.update({'holds': check.holds, 'margin': check.margin, 'se': check.se, 'empty': check.empty})
    try:
        result['suggested_c'] = suggestC(pred.h, pred.spec, negated, ws, X, method)
    except UnsatisfiableThreshold:
        result['suggested_c'] = None
    return result


def tightenAll(predicates, ws, X, method = None, numThreads = 0):
    '''
    Parameters
    ----------------
     predicates - list of (symbol, RiskPredicate, negated)
     ws, X - workspace and uncertainty
     method - None (per-predicate default), CLOSED_FORM or MonteCarlo
     numThreads - (int) threads for the per-predicate checks; 0 runs them in sequence

    Returns
    ----------------
     a DataFrame with one row per predicate: c, holds, margin, se and the suggested minimal c
    '''
    jobs = [(symbol, pred, negated, ws, X, method) for symbol, pred, negated in predicates]
    if numThreads > 0:
        pool = ThreadPool(numThreads)
        rows = pool.starmap(_tightenOne, jobs)
        pool.close()
        pool.join()
    else:
        rows = [_tightenOne(*job) for job in jobs]
    columns = ['symbol', 'negated', 'measure', 'beta', 'gamma', 'c', 'holds', 'margin', 'se', 'empty', 'suggested_c']
    return pd.DataFrame(rows, columns=columns)


#%% Determinization
def negatedSymbol(symbol):
    return symbol + '_neg'


def determinize(f, table, cMap, ws, X, method = None, verify = True):
    '''
    Replaces every risk predicate by its deterministic counterpart.

    Parameters
    ----------------
     f - (Formula) in positive normal form
     table - (SymbolTable) with RiskPredicate payloads
     cMap - (dict) symbol -> c; negated occurrences use the key '<symbol>_neg'
     ws, X - workspace and uncertainty
     method - as in checkInclusion
     verify - (bool) run checkInclusion for every replaced predicate

    Returns
    ----------------
     (theta, detTable) where detTable holds DeterministicPredicate payloads.
     A risk atom occurring under negation becomes the separate predicate '<symbol>_neg'
     reading h <= c.
    '''
    positive = fm.atoms(_positiveAtoms(f))
    negative = fm.negatedAtoms(f)
    detTable = fm.SymbolTable()
    failures = []
    for symbol in table.symbols():
        kind = table.kindOf(symbol)
        payload = table.payloadOf(symbol)
        if kind != table.RISK:
            detTable.add(symbol, kind, payload)
            continue
        uses = [(symbol, False)] if symbol in positive else []
        if symbol in negative:
            uses.append((negatedSymbol(symbol), True))
        if not uses:
            logger.info("risk predicate %s does not occur in the formula", symbol)
        for name, negated in uses:
            c = cMap.get(name, payload.c if not negated else None)
            if c is None:
                raise InputError("no tightening constant given for '{}'".format(name))
            if verify:
                check = checkInclusion(payload.h, payload.spec, c, negated, ws, X, method)
                logger.info("inclusion check", extra={'event': 'inclusion', 'symbol': name, 'c': c,
                                                      'holds': check.holds, 'margin': check.margin})
                if not check.holds:
                    failures.append(name)
            detTable.add(name, detTable.DET, DeterministicPredicate(payload.h, c, negated))
    ##
    # Error Handling
    ##
    if failures:
        raise AssumptionViolated("risk inclusion fails for {}".format(', '.join(failures)), failures)

    def swap(node):
        if isinstance(node, fm.Not) and isinstance(node.arg, fm.Atom) and table.kindOf(node.arg.name) == table.RISK:
            return fm.Atom(negatedSymbol(node.arg.name))
        return None

    return fm.mapNodes(f, swap), detTable


def _positiveAtoms(f):
    '''Formula whose atoms are those occurring outside a direct negation.'''
    if isinstance(f, fm.Not) and isinstance(f.arg, fm.Atom):
        return fm.Top()
    if isinstance(f, fm.Atom):
        return f
    kids = fm.children(f)
    if not kids:
        return fm.Top()
    result = _positiveAtoms(kids[0])
    for kid in kids[1:]:
        result = fm.And(result, _positiveAtoms(kid))
    return result
