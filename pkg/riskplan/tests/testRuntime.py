import io
import os
import tempfile
import unittest
from fractions import Fraction

import numpy as np
import pandas as pd

from riskplan import formula as fm
from riskplan import runtime as rt
from riskplan.errors import AssumptionViolated, InputError, SpecFileError, UnknownSymbol
from riskplan.feasibility import FeasibilityOracle, makeCube
from riskplan.risk import Affine, DeterministicPredicate, Workspace


def affineOracle():
    table = fm.SymbolTable()
    table.add('a', table.DET, DeterministicPredicate(Affine((1, 0), (0,), 0), 2))
    table.add('uc', table.UNCONTROLLABLE)
    return FeasibilityOracle(table, Workspace([0, 0], [10, 10]), [0]), table


class testDynamics(unittest.TestCase):

    def testSingleIntegrator(self):
        system = rt.SingleIntegrator(2, 2)
        self.assertEqual(system.dt, Fraction(1, 100))
        np.testing.assert_allclose(system.clip(np.array([3.0, 4.0])), [1.2, 1.6])
        np.testing.assert_allclose(system.clip(np.array([0.5, 0.0])), [0.5, 0.0])
        np.testing.assert_allclose(system.step(np.zeros(2), [3, 4], Fraction(1, 2)), [0.6, 0.8])
        for args in ((0, 1), (2, 0), (2, 1, 0)):
            with self.assertRaises(InputError):
                rt.SingleIntegrator(*args)

    def testMotion(self):
        motion = rt.Motion([[0, 0], [3, 4]], 0, 5)
        self.assertAlmostEqual(motion.speed, 1.0)
        np.testing.assert_allclose(motion.position(Fraction(5, 2)), [1.5, 2.0])
        np.testing.assert_allclose(motion.position(10), [3, 4])
        np.testing.assert_allclose(motion.position(-1), [0, 0])
        ##
        # Without an end, the speed decides the arrival
        ##
        timed = rt.Motion([[0, 0], [3, 4]], 1, speed=2)
        self.assertEqual(timed.end, Fraction(7, 2))
        still = rt.Motion([[1, 1]], 2, speed=2)
        self.assertEqual(still.end, 2)
        np.testing.assert_allclose(still.position(3), [1, 1])


class testControllers(unittest.TestCase):

    def setUp(self):
        self.oracle, self.table = affineOracle()
        self.outside = makeCube({'p1': False})
        self.inside = makeCube({'p1': True})

    def testGuard(self):
        library = rt.ControllerLibrary(self.oracle, 20, Fraction(3, 2), resolution=11, samples=50)
        self.assertEqual(library.guard, (rt.ClockAtom(rt.CONTROL_CLOCK, '>', Fraction(3, 2)),))

    def testCertify(self):
        fast = rt.ControllerLibrary(self.oracle, 20, resolution=11, samples=50)
        controller = fast.certify(self.outside, self.inside, rt.REACH_AT_EXACTLY)
        self.assertIsNotNone(controller)
        self.assertLess(controller.maxLength, 20)
        self.assertGreaterEqual(controller.maxLength, 2 - 1e-9)
        self.assertIs(fast.certify(self.outside, self.inside, rt.REACH_AT_EXACTLY), controller)
        ##
        # Crossing from x1 = 0 to x1 = 2 takes longer than one time unit at speed 1
        ##
        slow = rt.ControllerLibrary(self.oracle, 1, resolution=11, samples=50)
        self.assertIsNone(slow.certify(self.outside, self.inside, rt.REACH_AT_EXACTLY))

    def testMotions(self):
        library = rt.ControllerLibrary(self.oracle, 20, resolution=11, samples=50)
        controller = library.certify(self.outside, self.inside, rt.REACH_AT_EXACTLY)
        motion = controller.motion(np.array([0.5, 5.0]), 0, Fraction(3, 2))
        self.assertEqual(motion.end, Fraction(3, 2))
        arrival = motion.position(Fraction(3, 2))
        self.assertGreaterEqual(arrival[0], 2)
        self.assertLess(arrival[0], 2 + 1e-6)
        self.assertLess(motion.position(Fraction(1))[0], 2)
        ##
        # Leaving an open region ends on its last point
        ##
        back = library.certify(self.inside, self.outside, rt.REACH_AFTER_OPEN)
        self.assertIsNotNone(back)
        self.assertGreaterEqual(back.motion(np.array([6.0, 5.0]), 0, 2).position(2)[0], 2)
        hold = library.hold(self.inside).motion(np.array([2.5, 5.0]), 0)
        self.assertTrue(all(p[0] >= 2 for p in hold.points))


class testEvents(unittest.TestCase):

    def testParse(self):
        schedule = rt.EventSchedule.parse(["# header", "3/2 uc", "", "4 uc  # again", "4 ub"], ['uc', 'ub'])
        self.assertEqual(schedule.times(), [Fraction(3, 2), Fraction(4)])
        self.assertEqual(schedule.at(4), frozenset({'uc', 'ub'}))
        self.assertIsNone(schedule.at(1))
        self.assertIs(schedule.validate(2), schedule)
        with self.assertRaises(AssumptionViolated) as caught:
            schedule.validate(3)
        self.assertEqual(caught.exception.offenders, [Fraction(3, 2), Fraction(4)])
        ##
        # Without a separation every schedule passes
        ##
        self.assertIs(schedule.validate(None), schedule)
        empty = rt.EventSchedule()
        self.assertIs(empty.validate(None), empty)

    def testLineInjector(self):
        stream = io.StringIO("# typed\n1 uc\n\n3/2 uc\n3/2 ub\n5 uc\n")
        hook = rt.LineInjector(stream, ['uc', 'ub'])
        self.assertIsNone(hook(Fraction(1, 2)))
        self.assertEqual(hook(Fraction(101, 100)), frozenset({'uc'}))
        self.assertIsNone(hook(Fraction(11, 10)))
        self.assertEqual(hook(2), frozenset({'uc', 'ub'}))
        self.assertEqual(hook.waiting, (Fraction(5), frozenset({'uc'})))
        self.assertEqual(hook(5), frozenset({'uc'}))
        self.assertIsNone(hook(6))
        self.assertTrue(hook.closed)
        with self.assertRaises(UnknownSymbol):
            rt.LineInjector(io.StringIO("1 ux\n"), ['uc'])(1)

    def testErrors(self):
        with self.assertRaises(SpecFileError):
            rt.EventSchedule.parse(["1"])
        with self.assertRaises(SpecFileError):
            rt.EventSchedule.parse(["soon uc"])
        with self.assertRaises(SpecFileError):
            rt.EventSchedule.parse(["0 uc"])
        with self.assertRaises(UnknownSymbol):
            rt.EventSchedule.parse(["1 ux"], ['uc'])
        with self.assertRaises(SpecFileError):
            rt.EventSchedule.load(os.path.join(tempfile.gettempdir(), 'riskplan-missing-events.txt'))

    def testSimulateChecks(self):
        oracle, table = affineOracle()
        system = rt.SingleIntegrator(2, 20)
        with self.assertRaises(InputError):
            rt.simulate(None, None, rt.EventSchedule(), system, oracle, table, [0, 0, 0])
        events = rt.EventSchedule.parse(["1 uc"])
        with self.assertRaises(InputError):
            rt.simulate(None, None, events, system, oracle, table, [0, 0])


class testTraces(unittest.TestCase):

    def setUp(self):
        ##
        # x1 crosses 2 at t = 1 and stays; the loop is [1, 2)
        ##
        self.frame = pd.DataFrame({
            't': [0.0, 0.5, 1.0, 1.5, 2.0],
            't_exact': ['0', '1/2', '1', '3/2', '2'],
            'x1': [0.0, 1.0, 2.0, 2.5, 2.5],
            'x2': [5.0] * 5,
            'uc': [False] * 5,
            'a': [False, False, True, True, True],
            'segment': [0, 0, 1, 1, 1],
            'window': [0, 0, 1, 1, 1],
            'point': [True, False, True, False, True],
        })
        self.trace = rt.Trace(self.frame, (Fraction(1), Fraction(1)), ['a'], ['uc'])
        self.oracle, self.table = affineOracle()

    def testCsv(self):
        handle = io.StringIO()
        self.trace.toCsv(handle)
        lines = handle.getvalue().splitlines()
        self.assertEqual(lines[0], '# lasso_start=1 period=1')
        self.assertEqual(lines[1].split(','), list(self.frame.columns))
        path = os.path.join(tempfile.mkdtemp(), 'trace.csv')
        self.trace.toCsv(path)
        loaded = rt.Trace.fromCsv(path, ['a'], ['uc'])
        self.assertEqual(loaded.lasso, self.trace.lasso)
        self.assertEqual(list(loaded.frame['t_exact']), list(self.frame['t_exact']))
        with self.assertRaises(SpecFileError):
            rt.Trace.fromCsv(path, ['a', 'b'], ['uc'])

    def testSignal(self):
        np.testing.assert_allclose(self.trace.positionAt(1.4), [2.5, 5.0])
        signal = self.trace.toSignal(self.table)
        self.assertEqual(signal.breakpoints, [0, 1, 2])
        self.assertFalse(fm.evaluate(fm.Atom('p1'), signal, 0))
        self.assertTrue(fm.evaluate(fm.Atom('p1'), signal, 1))
        self.assertTrue(fm.evaluate(fm.Atom('p1'), signal, Fraction(7, 2)))
        short = rt.Trace(self.frame.iloc[:3], (Fraction(1), Fraction(1)), ['a'], ['uc'])
        with self.assertRaises(SpecFileError):
            short.toSignal(self.table)


if __name__ == '__main__':
    unittest.main()
