import unittest
from fractions import Fraction

from riskplan import formula as fm
from riskplan.errors import FormulaSyntaxError, SingletonInterval, UnsupportedInterval, UnknownSymbol, InputError


EXAMPLE = "F(0,5) r1 & G[0,inf)(o1 & o2 & (O(0,1) uc -> F(0,3) r2))"


def exampleTable():
    table = fm.SymbolTable()
    for symbol in ('r1', 'o1', 'o2', 'r2'):
        table.add(symbol, table.RISK)
    table.add('uc', table.UNCONTROLLABLE)
    return table


class testParsing(unittest.TestCase):

    def testExampleFormula(self):
        table = exampleTable()
        f = fm.parse(EXAMPLE, table)
        ##
        # Top level is the conjunction of the reach and the always part
        ##
        self.assertIsInstance(f, fm.And)
        self.assertEqual(f.left, fm.FutureEventually(fm.Interval(0, 5), fm.Atom('r1')))
        self.assertIsInstance(f.right, fm.FutureAlways)
        self.assertFalse(f.right.interval.lowerOpen)
        self.assertIsNone(f.right.interval.upper)
        ##
        # The implication is desugared
        ##
        implication = f.right.arg.right
        self.assertEqual(implication, fm.Or(fm.Not(fm.PastEventually(fm.Interval(0, 1), fm.Atom('uc'))),
                                            fm.FutureEventually(fm.Interval(0, 3), fm.Atom('r2'))))
        self.assertEqual(fm.atoms(f), {'r1', 'o1', 'o2', 'r2', 'uc'})
        ##
        # Printing and parsing again gives the same tree
        ##
        self.assertEqual(fm.parse(fm.toText(f), table), f)

    def testRationalBounds(self):
        f = fm.parse("a U(1/2,2.5) b")
        self.assertEqual(f.interval.lower, Fraction(1, 2))
        self.assertEqual(f.interval.upper, Fraction(5, 2))
        self.assertEqual(fm.toRational(0.1), Fraction(1, 10))
        self.assertEqual(fm.toRational('3/4'), Fraction(3, 4))
        self.assertEqual(fm.rationalText(Fraction(5, 2)), '5/2')
        self.assertEqual(fm.rationalText(4), '4')

    def testErrors(self):
        with self.assertRaises(FormulaSyntaxError) as ctx:
            fm.parse("a & ")
        self.assertIsNotNone(ctx.exception.position)
        with self.assertRaises(FormulaSyntaxError):
            fm.parse("F(0,2 a")
        with self.assertRaises(FormulaSyntaxError):
            fm.parse("F(0,inf] a")
        with self.assertRaises(FormulaSyntaxError):
            fm.parse("a $ b")
        with self.assertRaises(SingletonInterval):
            fm.parse("F[1,1] a")
        with self.assertRaises(UnknownSymbol):
            fm.parse("r1 & ghost", exampleTable())


class testSymbolTable(unittest.TestCase):

    def testPropositions(self):
        table = exampleTable()
        self.assertEqual(table.propOf('r1'), 'p1')
        self.assertEqual(table.propOf('r2'), 'p4')
        self.assertEqual(table.propOf('uc'), 'uc')
        self.assertEqual(table.symbolOf('p2'), 'o1')
        self.assertTrue(table.isPredicateProp('p3'))
        self.assertFalse(table.isPredicateProp('uc'))
        self.assertEqual(table.uncontrollables(), ['uc'])
        f = fm.parse(EXAMPLE, table)
        abstracted = fm.abstract(f, table)
        self.assertEqual(fm.atoms(abstracted), {'p1', 'p2', 'p3', 'p4', 'uc'})
        self.assertEqual(fm.concretize(abstracted, table), f)

    def testReservedNames(self):
        table = fm.SymbolTable()
        with self.assertRaises(InputError):
            table.add('p3', table.DET)
        with self.assertRaises(InputError):
            table.add('F', table.DET)
        table.add('a', table.DET)
        with self.assertRaises(InputError):
            table.add('a', table.DET)


class testNormalForms(unittest.TestCase):

    def testPositiveNormalForm(self):
        f = fm.toPositiveNormalForm(fm.parse("!(a U(0,inf) b)"))
        self.assertEqual(f, fm.Release(fm.Not(fm.Atom('a')), fm.OPEN_INF, fm.Not(fm.Atom('b'))))
        f = fm.toPositiveNormalForm(fm.parse("!G(0,2) (a | !b)"))
        self.assertEqual(f, fm.FutureEventually(fm.Interval(0, 2), fm.And(fm.Not(fm.Atom('a')), fm.Atom('b'))))
        self.assertEqual(fm.negatedAtoms(f), {'a'})

    def testRewriteToBase(self):
        ##
        # Always with an interval closed at zero keeps the instantaneous conjunct
        ##
        f = fm.rewriteToBase(fm.parse("G[0,inf) a"))
        self.assertEqual(f, fm.And(fm.Atom('a'), fm.Not(fm.Until(fm.Top(), fm.OPEN_INF, fm.Not(fm.Atom('a'))))))
        self.assertTrue(fm.isBaseForm(f))
        ##
        # Bounded until splits into the unbounded until and a bounded eventually
        ##
        f = fm.rewriteToBase(fm.parse("a U(0,3) b"))
        self.assertEqual(f, fm.And(fm.Until(fm.Atom('a'), fm.OPEN_INF, fm.Atom('b')),
                                   fm.FutureEventually(fm.Interval(0, 3), fm.Atom('b'))))
        self.assertTrue(fm.isBaseForm(fm.rewriteToBase(fm.parse(EXAMPLE))))
        self.assertFalse(fm.isBaseForm(fm.parse("G(0,2) a")))
        with self.assertRaises(UnsupportedInterval):
            fm.rewriteToBase(fm.parse("F(1,2) a"))
        with self.assertRaises(UnsupportedInterval):
            fm.rewriteToBase(fm.parse("F(0,2] a"))


class testMonitor(unittest.TestCase):

    def testFiniteSignal(self):
        d = fm.BooleanSignal.fromTruth(10, {'p': [(2, 3, True, False)]})
        ##
        # The open window (0,2) misses the closed start of p, the closed one catches it
        ##
        self.assertTrue(fm.evaluate(fm.parse("F(0,5) p"), d, 0))
        self.assertFalse(fm.evaluate(fm.parse("F(0,1) p"), d, 0))
        self.assertFalse(fm.evaluate(fm.parse("F(0,2) p"), d, 0))
        self.assertTrue(fm.evaluate(fm.parse("F[0,2] p"), d, 0))
        ##
        # Past operators look back from the evaluation time
        ##
        self.assertTrue(fm.evaluate(fm.parse("O(0,1) p"), d, Fraction(7, 2)))
        self.assertFalse(fm.evaluate(fm.parse("O(0,1) p"), d, 4))
        self.assertTrue(d.valueAt('p', 2))
        self.assertFalse(d.valueAt('p', 3))

    def testLassoSignal(self):
        d = fm.BooleanSignal.fromTruth(4, {'p': [(2, 3, True, False)]}, lasso=(2, 2))
        self.assertTrue(d.valueAt('p', 100))
        self.assertFalse(d.valueAt('p', 101))
        self.assertTrue(fm.evaluate(fm.parse("G(0,inf) F(0,3) p"), d, 0))
        self.assertFalse(fm.evaluate(fm.parse("G(0,inf) F(0,1) p"), d, 0))
        self.assertTrue(fm.evaluate(fm.parse("F(0,inf) p"), d, 0))
        sat = fm.satisfactionSignal(fm.parse("F(0,1) p"), d)
        self.assertFalse(sat.valueAt('sat', 0))
        self.assertTrue(sat.valueAt('sat', Fraction(3, 2)))

    def testSignalErrors(self):
        with self.assertRaises(InputError):
            fm.BooleanSignal([0, 1], [{'p': True}], [{'p': True}], lasso=(1, 1))
        with self.assertRaises(InputError):
            fm.BooleanSignal([0, 2, 1], [{'p': True}] * 2, [{'p': True}] * 2)
        frame = fm.BooleanSignal.fromTruth(4, {'p': [(1, 2, False, False)]}).toFrame()
        self.assertEqual(list(frame.columns), ['t_start', 't_end', 'kind', 'p'])
        self.assertEqual(len(frame), 6)


if __name__ == '__main__':
    unittest.main()
