import random
import unittest
from fractions import Fraction

from riskplan import formula as fm
from riskplan import region as rg
from riskplan import transducer as td
from riskplan.errors import RegionBoundExceeded, UnrealizablePath, InputError


class testRegionSpace(unittest.TestCase):

    def setUp(self):
        ##
        # Constants 3/2 and 1 scale by 2 to the integer bounds 3 and 2
        ##
        self.space = rg.RegionSpace(('x', 'y'), {'x': Fraction(3, 2), 'y': 1})

    def testScaling(self):
        self.assertEqual(self.space.scale, 2)
        self.assertEqual(self.space.bounds, (3, 2))
        self.assertEqual(rg.RegionSpace(('x',), {'x': 1}).alurDillBound(), 8)
        ##
        # A common denominator from smaller constants refines the grid
        ##
        finer = rg.RegionSpace(('x',), {'x': Fraction(3, 2)}, scale=4)
        self.assertEqual((finer.scale, finer.bounds), (4, (6,)))
        self.assertTrue(finer.satisfies(finer.regionOf({'x': Fraction(1, 4)}), [td.ClockAtom('x', '==', Fraction(1, 4))]))

    def testSuccessorAndReset(self):
        start = self.space.initial()
        self.assertEqual(start, ((0, 0), ((0, 1),)))
        self.assertTrue(self.space.isPoint(start))
        moving = self.space.successor(start)
        self.assertEqual(moving, ((0, 0), ((), (0, 1))))
        self.assertFalse(self.space.isPoint(moving))
        one = self.space.successor(moving)
        self.assertEqual(one, ((1, 1), ((0, 1),)))
        self.assertEqual(self.space.reset(one, ['x']), ((0, 1), ((0, 1),)))
        self.assertEqual(self.space.saturate(one, [1]), ((1, None), ((0,),)))

    def testSatisfies(self):
        half = ((1, 1), ((0, 1),))
        self.assertTrue(self.space.satisfies(half, [td.ClockAtom('x', '<=', Fraction(1, 2))]))
        self.assertFalse(self.space.satisfies(half, [td.ClockAtom('x', '<', Fraction(1, 2))]))
        self.assertTrue(self.space.satisfies(half, [td.ClockAtom('y', '==', Fraction(1, 2))]))
        saturated = ((None, 1), ((1,),))
        self.assertTrue(self.space.satisfies(saturated, [td.ClockAtom('x', '>', Fraction(3, 2))]))
        self.assertFalse(self.space.satisfies(saturated, [td.ClockAtom('x', '<=', Fraction(3, 2))]))

    def testRegionOf(self):
        self.assertEqual(self.space.regionOf({'x': Fraction(1, 4), 'y': 2}), ((0, None), ((), (0,))))
        self.assertEqual(self.space.regionOf({'x': 0, 'y': 0}), self.space.initial())
        self.assertEqual(self.space.text(self.space.initial()), 'x=0 y=0 []')


class testRegionAutomaton(unittest.TestCase):

    def testActiveClocks(self):
        active = rg.activeClocks(td.atomicTst(td.FUTURE_EVENTUALLY, 3))
        self.assertEqual(active['W'], frozenset({0}))
        self.assertEqual(active['A'], frozenset())
        self.assertEqual(active[td.INIT], frozenset())

    def testUnit(self):
        ##
        # init, the instant after a step and the open interval
        ##
        ra = rg.buildRAC(td.unitTst())
        self.assertEqual(len(ra), 3)
        self.assertEqual(ra.acceptance, [frozenset(range(3))])
        self.assertEqual([ra.phase(q) for q in range(3)].count(1), 1)
        lines = rg.dumpRegionAutomaton(ra).splitlines()
        self.assertEqual(len([l for l in lines if l.startswith('q')]), 3)
        with self.assertRaises(RegionBoundExceeded):
            rg.buildRAC(td.unitTst(), maxStates=1)

    def testDegeneralize(self):
        self.assertEqual(rg.nextCounter(1, 3), 2)
        self.assertEqual(rg.nextCounter(3, 3), 1)
        ra = rg.buildRAC(td.unitTst())
        dra = rg.degeneralize(ra)
        self.assertEqual(len(dra), 3)
        self.assertEqual(len(dra.accepting), 3)
        self.assertIsNotNone(rg.nestedDfs(dra))
        ra.acceptance = []
        with self.assertRaises(InputError):
            rg.degeneralize(ra)

    def testUntilAcceptance(self):
        ##
        # a U b with b never true has no accepting run
        ##
        dra = rg.degeneralize(rg.buildRAC(td.atomicTst(td.UNTIL)))
        pending = {q for q in range(len(dra)) if dra.location(q) == 'P'}
        self.assertTrue(pending)
        self.assertFalse(pending & dra.accepting)
        self.assertIsNone(rg.nestedDfs(dra, allowed={dra.initial} | pending))


class testTimings(unittest.TestCase):

    def testUnitLasso(self):
        dra = rg.degeneralize(rg.buildRAC(td.unitTst()))
        prefix, cycle = rg.nestedDfs(dra)
        path = rg.concretizeTimings(dra, prefix, cycle)
        self.assertGreater(path.period, 0)
        self.assertTrue(path.validate(dra))
        self.assertEqual(path.delays(dra)[0], 0)

    def testSeparatedEvents(self):
        ##
        # Repeated events in I must wait for z >= 2 between firings
        ##
        dra = rg.degeneralize(rg.buildRAC(td.atomicTst(td.UNCONTROLLABLE, 2)))
        allowed = {q for q in range(len(dra)) if dra.location(q) in (td.INIT, 'I')}
        noSelfLoop = lambda q, k: not (dra.edges[q][k][0] == rg.TIME and dra.edges[q][k][2] == q)
        prefix, cycle = rg.nestedDfs(dra, allowed=allowed, edgeOk=noSelfLoop)
        path = rg.concretizeTimings(dra, prefix, cycle)
        self.assertTrue(path.validate(dra))
        self.assertGreaterEqual(path.period, 2)
        fired = [valuation for q, k, t, valuation in path.discreteSteps(dra) if dra.edges[q][k][1].guard]
        self.assertTrue(fired)
        self.assertTrue(all(v['z'] >= 2 for v in fired))

    def testUnrealizable(self):
        with self.assertRaises(UnrealizablePath):
            rg._solveDelays([({0: 1}, Fraction(0), '<')], 1)


class testMembership(unittest.TestCase):

    def testAtom(self):
        tst = td.compile(fm.Atom('p'))
        ticks = fm.BooleanSignal.fromTruth(1, {'p': [(0, 0, True, True)]}, lasso=(0, 1))
        self.assertTrue(rg.membership(tst, ticks))
        silent = fm.BooleanSignal.fromTruth(1, {}, lasso=(0, 1), propositions=['p'])
        self.assertFalse(rg.membership(tst, silent))
        with self.assertRaises(InputError):
            rg.membership(tst, fm.BooleanSignal.fromTruth(1, {'p': []}))

    def testWitnessBetweenConstants(self):
        ##
        # p holds only at 1/4, a breakpoint finer than any constant of the formulas
        ##
        quarter = Fraction(1, 4)
        signal = fm.BooleanSignal.fromTruth(2, {'p': [(quarter, quarter, True, True)]}, lasso=(1, 1),
                                            propositions=['q'])
        reader = rg.signalTst(signal)
        self.assertEqual(reader.timeScale(), 4)
        for text in ('F(0,1) p', 'F(0,inf) p', 'top U(0,inf) p'):
            f = fm.rewriteToBase(fm.parse(text))
            self.assertTrue(fm.evaluate(f, signal, 0), text)
            self.assertTrue(rg.membership(td.compile(f), signal), text)
        for text in ('p U(0,inf) p', '!(q) & (p U(0,inf) p)', 'F(0,inf) (p & O(0,1) p)'):
            f = fm.rewriteToBase(fm.parse(text))
            self.assertEqual(rg.membership(td.compile(f), signal), fm.evaluate(f, signal, 0), text)
        handover = fm.BooleanSignal.fromTruth(2, {'p': [(0, quarter, True, False)], 'q': [(quarter, quarter, True, True)]},
                                              lasso=(1, 1))
        f = fm.rewriteToBase(fm.parse('p U(0,inf) q'))
        self.assertTrue(fm.evaluate(f, handover, 0))
        self.assertTrue(rg.membership(td.compile(f), handover))
        self.assertFalse(rg.membership(td.compile(fm.rewriteToBase(fm.parse('F(0,1/8) p'))), signal))


class testCompilerAgreement(unittest.TestCase):
    '''Accepting runs with the output true at 0 exist exactly when the monitor says the formula holds.'''

    BOUNDS = ('1', '3/2', '2', '3')

    def randomFormula(self, rng, depth):
        if depth == 0 or rng.random() < 0.25:
            return rng.choice(['p', 'q'])
        kind = rng.choice(['not', 'and', 'F', 'O', 'U', 'S'])
        if kind == 'not':
            return '!({})'.format(self.randomFormula(rng, depth - 1))
        if kind in ('F', 'O'):
            return '{}(0,{}) ({})'.format(kind, rng.choice(self.BOUNDS), self.randomFormula(rng, depth - 1))
        left, right = self.randomFormula(rng, depth - 1), self.randomFormula(rng, depth - 1)
        if kind == 'and':
            return '({}) & ({})'.format(left, right)
        return '({}) {}(0,inf) ({})'.format(left, kind, right)

    def randomSignal(self, rng):
        truth = {}
        for prop in ('p', 'q'):
            stretches = []
            for k in range(8):
                lo, hi = Fraction(k, 2), Fraction(k + 1, 2)
                if rng.random() < 0.5:
                    stretches.append((lo, hi, rng.random() < 0.5, rng.random() < 0.5))
                elif rng.random() < 0.2:
                    stretches.append((lo, lo, True, True))
                elif rng.random() < 0.1:
                    stretches.append((lo + Fraction(1, 4), lo + Fraction(1, 4), True, True))
            truth[prop] = stretches
        return fm.BooleanSignal.fromTruth(4, truth, lasso=(2, 2), propositions=['p', 'q'])

    def testRandomFormulas(self):
        rng = random.Random(20261018)
        formulas = []
        while len(formulas) < 100:
            text = self.randomFormula(rng, 3)
            ##
            # At most two timed operators keep the region automata small
            ##
            if text.count('(0,') - text.count('(0,inf)') <= 2:
                formulas.append(text)
        for text in formulas:
            f = fm.rewriteToBase(fm.parse(text))
            tst = td.compile(f)
            for _ in range(20):
                signal = self.randomSignal(rng)
                self.assertEqual(rg.membership(tst, signal), fm.evaluate(f, signal, 0), text)


if __name__ == '__main__':
    unittest.main()
