# -*- coding: utf-8 -*-
"""
Name: specFile.py
Last Updated: 10/18/2026

Loads and validates the JSON planning problem: workspace, Gaussian uncertainty,
predicate table, uncontrollable propositions, formula, initial state, system,
controller and Monte Carlo settings.
"""
import json
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from riskplan.errors import SpecFileError, InputError
from riskplan import formula as fm
from riskplan import risk
from riskplan.runtime import SingleIntegrator

logger = logging.getLogger(__name__)

PREDICATE_KINDS = ('ball_in', 'ball_out', 'affine')
MC_METHODS = ('auto', 'closed_form', 'monte_carlo')


@dataclass
class PlanningProblem:
    '''Everything the commands need, with exact rationals for every time constant.'''
    ws: risk.Workspace
    X: risk.GaussianVector
    table: fm.SymbolTable
    formulaText: str
    formula: fm.Formula
    cMap: dict
    x0: np.ndarray
    system: SingleIntegrator
    zeta: Fraction = None
    epsZeno: Fraction = Fraction(1)
    guardLower: Fraction = Fraction(1)
    plannerResolution: int = 41
    certifySamples: int = 1000
    gridResolution: int = 200
    mcSamples: int = 100000
    mcMethod: str = 'monte_carlo'
    seed: int = 0xC0FFEE
    lassoPeriods: int = 2
    verifyInclusion: bool = True
    source: str = field(default=None, repr=False)

    @property
    def method(self):
        '''Risk evaluation used by inclusion checks: None lets each predicate pick its default.'''
        if self.mcMethod == 'auto':
            return None
        if self.mcMethod == 'closed_form':
            return risk.CLOSED_FORM
        return risk.MonteCarlo(self.mcSamples, self.seed)

    def riskPredicates(self):
        '''(symbol, RiskPredicate, negated) for every risk predicate and its negated occurrence.'''
        negative = fm.negatedAtoms(fm.toPositiveNormalForm(self.formula))
        result = []
        for symbol in self.table.riskPredicates():
            pred = self.table.payloadOf(symbol)
            result.append((symbol, pred, False))
            if symbol in negative:
                negated = risk.negatedSymbol(symbol)
                result.append((negated, replace(pred, c=self.cMap.get(negated)), True))
        return result

    def override(self, seed = None, mcSamples = None, lassoPeriods = None, zeta = None):
        '''Copy with command line overrides applied.'''
        changes = {}
        if seed is not None:
            changes['seed'] = int(seed)
        if mcSamples is not None:
            changes['mcSamples'] = int(mcSamples)
        if lassoPeriods is not None:
            changes['lassoPeriods'] = int(lassoPeriods)
        if zeta is not None:
            changes['zeta'] = fm.toRational(zeta)
        return replace(self, **changes)


def _require(data, key, where):
    if key not in data:
        raise SpecFileError("{} lacks the field '{}'".format(where, key))
    return data[key]


def _vector(values, where):
    try:
        array = np.asarray([float(fm.toRational(v)) for v in values], dtype=float)
    except (TypeError, InputError):
        raise SpecFileError("{} must be a list of numbers".format(where))
    if array.ndim != 1 or len(array) == 0:
        raise SpecFileError("{} must be a non-empty list of numbers".format(where))
    return array


def _rational(value, where):
    try:
        return fm.toRational(value)
    except InputError:
        raise SpecFileError("{} must be a rational number, got '{}'".format(where, value))


def _uncertainty(data):
    mean = _vector(_require(data, 'mean', 'uncertainty'), 'uncertainty.mean')
    if 'cov' in data:
        cov = np.asarray([_vector(row, 'uncertainty.cov') for row in data['cov']])
    elif 'cov_diag' in data:
        cov = _vector(data['cov_diag'], 'uncertainty.cov_diag')
    else:
        raise SpecFileError("uncertainty needs either 'cov' or 'cov_diag'")
    return risk.GaussianVector(mean, cov)


def _predicateFunction(entry, where):
    kind = _require(entry, 'kind', where)
    if kind not in PREDICATE_KINDS:
        raise SpecFileError("{}: unknown kind '{}', expected one of {}".format(where, kind, ', '.join(PREDICATE_KINDS)))
    if kind == 'affine':
        v = tuple(_vector(_require(entry, 'v', where), where + '.v'))
        w = tuple(_vector(_require(entry, 'w', where), where + '.w'))
        return risk.Affine(v, w, float(_rational(entry.get('b', 0), where + '.b')))
    idx = tuple(int(i) for i in _require(entry, 'idx', where))
    eps = float(_rational(_require(entry, 'eps', where), where + '.eps'))
    cls = risk.BallIn if kind == 'ball_in' else risk.BallOut
    return cls(idx, eps)


def parseSpec(data, source = None):
    '''
    Parameters
    ----------------
     data - (dict) the decoded JSON document
     source - (str) where it came from, for messages

    Returns
    ----------------
     PlanningProblem
    '''
    where = source or 'spec'
    ##
    # Error Handling
    ##
    if not isinstance(data, dict):
        raise SpecFileError("{} must be a JSON object".format(where))
    for key in ('workspace', 'uncertainty', 'predicates', 'formula', 'x0'):
        _require(data, key, where)

    workspace = data['workspace']
    ws = risk.Workspace(_vector(_require(workspace, 'lo', 'workspace'), 'workspace.lo'),
                        _vector(_require(workspace, 'hi', 'workspace'), 'workspace.hi'))
    X = _uncertainty(data['uncertainty'])
    x0 = _vector(data['x0'], 'x0')
    if len(x0) != ws.dim:
        raise SpecFileError("x0 has {} entries but the workspace has {} dimensions".format(len(x0), ws.dim))
    if not ws.contains(x0)[0]:
        raise SpecFileError("x0={} lies outside the workspace".format(x0.tolist()))

    table = fm.SymbolTable()
    cMap = {}
    for n, entry in enumerate(data['predicates']):
        name = 'predicates[{}]'.format(n)
        symbol = _require(entry, 'id', name)
        h = _predicateFunction(entry, name)
        try:
            h.checkDims(ws.dim, X.dim)
        except InputError as err:
            raise SpecFileError("{} ({}): {}".format(name, symbol, err))
        c = entry.get('c')
        c = None if c is None else float(_rational(c, name + '.c'))
        if 'risk' in entry:
            spec = entry['risk']
            riskSpec = risk.RiskSpec(spec.get('measure', 'VaR'), float(_rational(spec.get('beta', 0.9), name + '.beta')),
                                     float(_rational(spec.get('gamma', 0), name + '.gamma')))
            table.add(symbol, table.RISK, risk.RiskPredicate(h, riskSpec, c))
            if c is not None:
                cMap[symbol] = c
            if entry.get('c_neg') is not None:
                cMap[risk.negatedSymbol(symbol)] = float(_rational(entry['c_neg'], name + '.c_neg'))
        else:
            if c is None:
                raise SpecFileError("{} ({}) is deterministic and needs a constant 'c'".format(name, symbol))
            table.add(symbol, table.DET, risk.DeterministicPredicate(h, c))
    for symbol in data.get('uncontrollables', []):
        table.add(symbol, table.UNCONTROLLABLE)

    formula = fm.parse(data['formula'], table)

    system = data.get('system', {})
    controllers = data.get('controllers', {})
    mc = data.get('mc', {})
    method = mc.get('method', 'monte_carlo')
    if method not in MC_METHODS:
        raise SpecFileError("mc.method must be one of {}".format(', '.join(MC_METHODS)))
    zeta = data.get('zeta')
    problem = PlanningProblem(
        ws=ws, X=X, table=table, formulaText=data['formula'], formula=formula, cMap=cMap, x0=x0,
        system=SingleIntegrator(ws.dim, float(_rational(system.get('vmax', 20), 'system.vmax')),
                                _rational(system.get('dt', '1/100'), 'system.dt')),
        zeta=None if zeta is None else _rational(zeta, 'zeta'),
        epsZeno=_rational(data.get('eps_zeno', 1), 'eps_zeno'),
        guardLower=_rational(controllers.get('guard_lower', 1), 'controllers.guard_lower'),
        plannerResolution=int(controllers.get('grid', 41)),
        certifySamples=int(controllers.get('samples', 1000)),
        gridResolution=int(data.get('feasibility', {}).get('grid', 200)),
        mcSamples=int(mc.get('samples', 100000)),
        mcMethod=method,
        seed=int(mc.get('seed', 0xC0FFEE)),
        lassoPeriods=int(data.get('lasso_periods', 2)),
        verifyInclusion=bool(data.get('verify_inclusion', True)),
        source=source)
    if table.uncontrollables() and problem.zeta is None:
        raise SpecFileError("uncontrollable propositions need a minimal separation 'zeta'")
    if problem.zeta is not None and problem.zeta <= 0:
        raise SpecFileError("zeta must be positive")
    if problem.epsZeno <= 0:
        raise SpecFileError("eps_zeno must be positive")
    logger.info("spec loaded", extra={'event': 'spec', 'source': where, 'predicates': len(table.predicates()),
                                      'uncontrollables': len(table.uncontrollables()), 'dim': ws.dim})
    return problem


def loadSpec(path):
    '''Reads a JSON spec file into a PlanningProblem.'''
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as err:
        raise SpecFileError("cannot read spec {}: {}".format(path, err))
    except json.JSONDecodeError as err:
        raise SpecFileError("spec {} is not valid JSON: {}".format(path, err))
    return parseSpec(data, str(path))
