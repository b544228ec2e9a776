import unittest

import numpy as np

from riskplan import formula as fm
from riskplan import risk
from riskplan.errors import ClosedFormUnavailable, InputError, AssumptionViolated


def ballProblem():
    X = risk.GaussianVector([8, 8], [0.1, 0.1])
    ws = risk.Workspace([0, 0], [10, 10])
    return X, ws


class testRiskMeasures(unittest.TestCase):

    def testClosedForm(self):
        h = risk.Affine((1,), (-1,), 0)
        X = risk.GaussianVector([0], [1])
        ##
        # EV is linear, VaR and CVaR follow the standard normal quantile
        ##
        ev = risk.riskOf(h, [2], X, risk.RiskSpec('EV'))
        self.assertAlmostEqual(ev, -2)
        var = risk.riskOf(h, [0], X, risk.RiskSpec('VaR', 0.8))
        self.assertAlmostEqual(var, 0.8416, places=3)
        cvar = risk.riskOf(h, [0], X, risk.RiskSpec('CVaR', 0.8))
        self.assertAlmostEqual(cvar, 1.3998, places=3)
        self.assertLessEqual(risk.riskOf(h, [0], X, risk.RiskSpec('EV')), var)
        self.assertLessEqual(var, cvar)

    def testMonteCarloAgreement(self):
        h = risk.Affine((1,), (-1,), 0)
        X = risk.GaussianVector([0], [1])
        method = risk.MonteCarlo(samples=200000, seed=7)
        for measure in ('EV', 'VaR', 'CVaR'):
            spec = risk.RiskSpec(measure, 0.8)
            exact, zero = risk.riskEstimate(h, [0], X, spec)
            estimate, se = risk.riskEstimate(h, [0], X, spec, method)
            self.assertEqual(zero, 0.0)
            self.assertGreater(se, 0)
            self.assertLess(abs(estimate - exact), 4 * se + 1e-2)

    def testRandomAffine(self):
        ##
        # Closed form and sampling agree on random affine predicates with independent noise
        ##
        rng = np.random.default_rng(2026)
        method = risk.MonteCarlo(samples=100000, seed=11)
        for _ in range(20):
            h = risk.Affine(tuple(rng.normal(size=2)), tuple(rng.normal(size=2)), float(rng.normal()))
            X = risk.GaussianVector(list(rng.normal(size=2) * 3), list(rng.uniform(0.05, 2.0, size=2)))
            x = rng.uniform(0, 10, size=2)
            for measure in ('EV', 'VaR', 'CVaR'):
                spec = risk.RiskSpec(measure, float(rng.uniform(0.5, 0.95)))
                exact = risk.riskOf(h, x, X, spec)
                estimate, se = risk.riskEstimate(h, x, X, spec, method)
                self.assertLess(abs(estimate - exact), 4 * se + 1e-3, (measure, spec.beta))

    def testErrors(self):
        X, ws = ballProblem()
        with self.assertRaises(ClosedFormUnavailable):
            risk.riskOf(risk.BallIn((0, 1), 0.5), [8, 8], X, risk.RiskSpec('VaR', 0.8))
        with self.assertRaises(InputError):
            risk.RiskSpec('VaR', 1.0)
        with self.assertRaises(InputError):
            risk.RiskSpec('Median', 0.5)
        with self.assertRaises(InputError):
            risk.GaussianVector([0, 0], [[1, 0.5], [0, 1]])
        with self.assertRaises(InputError):
            risk.GaussianVector([0, 0], [1, 1, 1])
        with self.assertRaises(InputError):
            risk.Workspace([0, 0], [0, 1])


class testInclusion(unittest.TestCase):

    def testAffine(self):
        h = risk.Affine((1, 0), (-1,), -1)
        X = risk.GaussianVector([0], [0.01])
        ws = risk.Workspace([0, 0], [10, 10])
        spec = risk.RiskSpec('VaR', 0.8, 0)
        ##
        # The worst point of {x1 - 1 >= 0.2} is x1 = 1.2
        ##
        result = risk.checkInclusion(h, spec, 0.2, False, ws, X, risk.CLOSED_FORM)
        self.assertTrue(result.holds)
        self.assertAlmostEqual(result.witness[0], 1.2)
        self.assertAlmostEqual(result.risk, -0.2 + 0.1 * 0.8416, places=3)
        self.assertFalse(risk.checkInclusion(h, spec, 0.05, False, ws, X, risk.CLOSED_FORM).holds)
        ##
        # Suggested constants: the exact tightening, and gamma for EV
        ##
        self.assertAlmostEqual(risk.suggestC(h, spec, False, ws, X, risk.CLOSED_FORM), 0.0842, delta=2e-3)
        self.assertAlmostEqual(risk.suggestC(h, risk.RiskSpec('EV', 0.9, 0), False, ws, X, risk.CLOSED_FORM), 0, delta=2e-3)

    def testMonotoneInC(self):
        h = risk.Affine((1, 0), (-1,), -1)
        X = risk.GaussianVector([0], [0.01])
        ws = risk.Workspace([0, 0], [10, 10])
        spec = risk.RiskSpec('CVaR', 0.9, 0)
        verdicts = [risk.checkInclusion(h, spec, c, False, ws, X).holds for c in np.linspace(-1, 2, 31)]
        first = verdicts.index(True)
        self.assertTrue(all(verdicts[first:]))

    def testBalls(self):
        X, ws = ballProblem()
        method = risk.MonteCarlo(samples=100000, seed=0xC0FFEE)
        reach = risk.BallIn((0, 1), 0.5)
        var = risk.RiskSpec('VaR', 0.8, 0)
        ##
        # 0.35 leaves P(|x - X|^2 <= 0.5) near 0.755 on the boundary, 0.42 near 0.83
        ##
        self.assertFalse(risk.checkInclusion(reach, var, 0.35, False, ws, X, method).holds)
        passing = risk.checkInclusion(reach, var, 0.42, False, ws, X, method)
        self.assertTrue(passing.holds)
        self.assertGreaterEqual(passing.margin, -3 * passing.se)
        self.assertAlmostEqual(float(np.sum((passing.witness - X.mean) ** 2)), 0.08, places=6)
        avoid = risk.BallOut((0, 1), 0.5)
        cvar = risk.RiskSpec('CVaR', 0.9, 0)
        self.assertTrue(risk.checkInclusion(avoid, cvar, 1.2, False, ws, X, method).holds)
        ##
        # At 0.9 the worst tenth of |x - X|^2 on the boundary averages about 0.48 < 0.5, the limit is near 0.93
        ##
        self.assertFalse(risk.checkInclusion(avoid, cvar, 0.9, False, ws, X, method).holds)
        self.assertTrue(0.9 < risk.suggestC(avoid, cvar, False, ws, X, method) < 1.0)
        ##
        # Far from the region the negated predicate is safe, an empty set is reported
        ##
        self.assertTrue(risk.checkInclusion(reach, var, -1, True, ws, X, method).holds)
        empty = risk.checkInclusion(reach, var, 0.6, False, ws, X, method)
        self.assertTrue(empty.empty)
        self.assertFalse(empty.holds)

    def testTightenAll(self):
        X, ws = ballProblem()
        pred = risk.RiskPredicate(risk.BallIn((0, 1), 0.5), risk.RiskSpec('VaR', 0.8, 0), 0.42)
        report = risk.tightenAll([('r1', pred, False)], ws, X, risk.MonteCarlo(20000, 11))
        self.assertEqual(list(report['symbol']), ['r1'])
        self.assertTrue(bool(report.loc[0, 'holds']))
        self.assertGreater(report.loc[0, 'suggested_c'], 0.35)
        self.assertLess(report.loc[0, 'suggested_c'], 0.42)


class testDeterminize(unittest.TestCase):

    def setUp(self):
        self.X, self.ws = ballProblem()
        self.table = fm.SymbolTable()
        self.table.add('r1', self.table.RISK,
                       risk.RiskPredicate(risk.BallIn((0, 1), 0.5), risk.RiskSpec('VaR', 0.8, 0), None))
        self.table.add('uc', self.table.UNCONTROLLABLE)
        self.method = risk.MonteCarlo(20000, 5)

    def testPositiveAndNegated(self):
        f = fm.toPositiveNormalForm(fm.parse("F(0,5) r1 & G(0,5) (uc -> !r1)", self.table))
        theta, detTable = risk.determinize(f, self.table, {'r1': 0.42, 'r1_neg': -1}, self.ws, self.X, self.method)
        self.assertEqual(fm.atoms(theta), {'r1', 'r1_neg', 'uc'})
        self.assertEqual(detTable.kindOf('r1'), detTable.DET)
        self.assertEqual(detTable.kindOf('uc'), detTable.UNCONTROLLABLE)
        negated = detTable.payloadOf('r1_neg')
        self.assertTrue(negated.negated)
        self.assertEqual(negated.c, -1)
        ##
        # h(x, mean) = 0.5 - |x - mean|^2 reads >= c, the negated copy <= c
        ##
        self.assertTrue(detTable.payloadOf('r1').holds(np.array([8.1, 8.1]), self.X.mean))
        self.assertFalse(negated.holds(np.array([8.1, 8.1]), self.X.mean))
        self.assertTrue(negated.holds(np.array([2, 2]), self.X.mean))

    def testFailures(self):
        f = fm.toPositiveNormalForm(fm.parse("F(0,5) r1 & G(0,5) !r1", self.table))
        with self.assertRaises(InputError):
            risk.determinize(f, self.table, {'r1': 0.42}, self.ws, self.X, self.method)
        with self.assertRaises(AssumptionViolated) as ctx:
            risk.determinize(f, self.table, {'r1': 0.35, 'r1_neg': -1}, self.ws, self.X, self.method)
        self.assertEqual(ctx.exception.offenders, ['r1'])
        ##
        # Without risk atoms the formula is returned unchanged
        ##
        f = fm.parse("G(0,1) uc", self.table)
        theta, detTable = risk.determinize(f, self.table, {}, self.ws, self.X, self.method)
        self.assertEqual(theta, f)


if __name__ == '__main__':
    unittest.main()
