import io
import os
import unittest
from fractions import Fraction

import numpy as np

from riskplan import formula as fm
from riskplan import planner as pl
from riskplan.errors import AssumptionViolated, InputError
from riskplan.feasibility import makeCube
from riskplan.runtime import EventSchedule, LineInjector, REACH_AT_EXACTLY, REACH_AFTER_OPEN
from riskplan.specFile import parseSpec, loadSpec

EXAMPLE = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'data', 'reachAvoidEvent.json')


def reachProblem():
    return parseSpec({
        'workspace': {'lo': [0, 0], 'hi': [10, 10]},
        'uncertainty': {'mean': [8, 8], 'cov_diag': [0.1, 0.1]},
        'predicates': [{'id': 'r1', 'kind': 'ball_in', 'idx': [0, 1], 'eps': 0.5,
                        'risk': {'measure': 'VaR', 'beta': 0.8}, 'c': 0.42}],
        'formula': 'F(0,5) r1',
        'x0': [0.5, 0.5],
        'controllers': {'grid': 21, 'samples': 200},
        'feasibility': {'grid': 100},
        'mc': {'samples': 20000},
    }, 'reach')


class testAbstraction(unittest.TestCase):

    def testTransitionKind(self):
        outside = makeCube({'p1': False})
        inside = makeCube({'p1': True})
        self.assertEqual(pl.transitionKind(outside, inside), REACH_AT_EXACTLY)
        self.assertEqual(pl.transitionKind(inside, outside), REACH_AFTER_OPEN)
        self.assertIsNone(pl.transitionKind(inside, inside))
        mixed = makeCube({'p1': True, 'p2': False})
        self.assertIsNone(pl.transitionKind(makeCube({'p1': False, 'p2': True}), mixed))

    def testReachProduct(self):
        pipeline = pl.PlanningPipeline(reachProblem())
        pipeline.buildProduct()
        abstraction = pipeline.abstraction
        self.assertIn(makeCube({'p1': False}), abstraction.initial)
        self.assertNotIn(makeCube({'p1': True}), abstraction.initial)
        link = abstraction.transition(makeCube({'p1': False}), makeCube({'p1': True}))
        self.assertIsNotNone(link)
        self.assertEqual(link.kind, REACH_AT_EXACTLY)
        ##
        # The product adds the control clock and never grows the transducer
        ##
        self.assertIn(pl.CONTROL_CLOCK, pipeline.tstM.clocks)
        self.assertLessEqual(len(pipeline.tstM.states), len(pipeline.tstTheta.states))
        for t in pipeline.tstM.initialTransitions():
            self.assertIn(pl.CONTROL_CLOCK, t.resets)


class testReachPlan(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.pipeline = pl.PlanningPipeline(reachProblem())
        cls.plan = cls.pipeline.synthesize()

    def testSatisfiable(self):
        self.assertTrue(pl.PlanningPipeline(reachProblem()).checkSatisfiable().sat)

    def testPlanMeetsFormula(self):
        plan = self.plan
        self.assertGreater(plan.period, 0)
        self.assertEqual(plan.props, ['p1'])
        self.assertTrue(fm.evaluate(self.pipeline.theta, plan.toSignal(), 0))
        ##
        # Controllers need strictly more than one time unit, so r1 is reached in (1,5)
        ##
        reached = [s.time for s in plan.steps(Fraction(5)) if ('p1', True) in s.label]
        self.assertTrue(reached)
        self.assertTrue(1 < reached[0] < 5)

    def testRendering(self):
        plan = self.plan
        data = plan.toJson()
        self.assertEqual(data['segments'][0]['t_start'], '0')
        self.assertTrue(data['segments'][0]['start_closed'])
        self.assertEqual(set(data['segments'][0]['literals']), {'r1'})
        self.assertEqual(fm.toRational(data['lasso']['period']), plan.period)
        frame = plan.toFrame()
        self.assertIn('r1', frame.columns)
        self.assertFalse(frame.loc[0, 'r1'])
        self.assertIn('Plan(', repr(plan))

    def testSchedule(self):
        schedule = self.pipeline.schedule(self.plan)
        windows = schedule.windows(self.plan.horizon())
        self.assertEqual(windows[0].start, 0)
        self.assertEqual(windows[0].kind, REACH_AT_EXACTLY)
        self.assertGreater(windows[0].end, 1)
        self.assertIsNone(windows[-1].end)
        self.assertIs(schedule.windowAt(0), windows[0])

    def testReplanErrors(self):
        answer = self.pipeline.replanner()
        with self.assertRaises(InputError):
            answer(self.plan, 0, {'uc'})
        with self.assertRaises(InputError):
            answer(self.plan, 1, set())

    def testClosedLoop(self):
        trace, final = self.pipeline.simulate()
        self.assertIs(final, self.plan)
        frame = trace.toFrame()
        self.assertEqual(frame.loc[0, 't'], 0)
        self.assertEqual(trace.lasso, self.plan.signalLasso)
        report = self.pipeline.verify(trace)
        self.assertTrue(report.thetaHolds)
        self.assertTrue(report.ok)


def collapse(segments, names):
    '''Consecutive distinct labels over the given symbols.'''
    labels = []
    for segment in segments:
        label = tuple(segment['literals'][n] for n in names)
        if not labels or labels[-1] != label:
            labels.append(label)
    return labels


class testEventExample(unittest.TestCase):
    '''The bundled example: reach r1, avoid o1 and o2, and visit r2 within 3 of every uc.'''

    @classmethod
    def setUpClass(cls):
        cls.problem = loadSpec(EXAMPLE)
        cls.pipeline = pl.PlanningPipeline(cls.problem)
        cls.plan = cls.pipeline.synthesize()

    def testSeparationDecides(self):
        tight = pl.PlanningPipeline(self.problem.override(zeta=1)).checkSatisfiable()
        self.assertFalse(tight.sat)
        self.assertTrue(pl.PlanningPipeline(self.problem).checkSatisfiable().sat)

    def testPlanStructure(self):
        data = self.plan.toJson()
        segments = data['segments']
        self.assertTrue(fm.evaluate(self.pipeline.theta, self.plan.toSignal(), 0))
        ##
        # Reach r1 once, then rest outside it with both obstacles avoided and r2 untouched
        ##
        self.assertEqual(collapse(segments, ['r1']), [(False,), (True,), (False,)])
        for segment in segments:
            literals = segment['literals']
            self.assertTrue(literals['o1'] and literals['o2'])
            self.assertFalse(literals['r2'])
            self.assertFalse(literals['uc'])
        entered = next(s for s in segments if s['literals']['r1'])
        self.assertTrue(0 < fm.toRational(entered['t_start']) < 5)
        loopStart = fm.toRational(data['lasso']['prefix_end'])
        self.assertFalse(any(s['literals']['r1'] for s in segments if fm.toRational(s['t_start']) >= loopStart))

    def testReplanAtEvent(self):
        pipeline = pl.PlanningPipeline(self.problem)
        plan = pipeline.synthesize()
        events = EventSchedule.parse(["1 uc"], self.problem.table.uncontrollables())
        trace, revised = pipeline.simulate(events)
        self.assertIn(Fraction(1), revised.events())
        ##
        # The revised plan repeats the executed one before the event
        ##
        for t in (Fraction(0), Fraction(1, 2)):
            self.assertEqual(revised.labelAt(t), plan.labelAt(t))
        self.assertTrue(bool(trace.toFrame()['uc'].any()))
        report = pipeline.verify(trace)
        self.assertTrue(report.ok, report.toDict())

    def testRevisedStructure(self):
        revised, schedule = self.pipeline.replanner()(self.plan, 1, {'uc'})
        self.assertTrue(fm.evaluate(self.pipeline.theta, revised.toSignal(), 0))
        segments = revised.toJson()['segments']
        ##
        # uc at 1, then r1, then r2 for good
        ##
        self.assertEqual(collapse(segments, ['uc', 'r1', 'r2']),
                         [(False, False, False), (True, False, False), (False, False, False),
                          (False, True, False), (False, False, False), (False, False, True)])
        fired = [s for s in segments if s['literals']['uc']]
        self.assertEqual([(s['t_start'], s['t_end']) for s in fired], [('1', '1')])
        entered = next(s for s in segments if s['literals']['r1'])
        self.assertTrue(1 < fm.toRational(entered['t_start']) < 4)
        reached = next(k for k, s in enumerate(segments) if s['literals']['r2'])
        self.assertLessEqual(fm.toRational(segments[reached]['t_start']), 4)
        self.assertTrue(all(s['literals']['r2'] for s in segments[reached:]))

    def testExecutionBounds(self):
        events = EventSchedule.parse(["1 uc"], self.problem.table.uncontrollables())
        frame = self.pipeline.simulate(events)[0].toFrame()
        xs = frame[['x1', 'x2']].to_numpy()
        times = [fm.toRational(t) for t in frame['t_exact']]
        ##
        # The state never jumps, the event instant included, and moves at most vmax per time unit
        ##
        vmax = self.problem.system.vmax
        for k in range(1, len(frame)):
            self.assertLessEqual(float(np.linalg.norm(xs[k] - xs[k - 1])), vmax * float(times[k] - times[k - 1]) + 1e-9)
        self.assertEqual(times.count(Fraction(1)), 1)

    def testInjectionTooSoon(self):
        hook = LineInjector(io.StringIO("1 uc\n3 uc\n"), self.problem.table.uncontrollables())
        with self.assertRaises(AssumptionViolated) as caught:
            self.pipeline.simulate(hook=hook)
        self.assertEqual(caught.exception.offenders, [Fraction(1), Fraction(3)])

    def testRunsRepeat(self):
        ##
        # Same inputs and seeds give the same plan and the same trace
        ##
        again = pl.PlanningPipeline(loadSpec(EXAMPLE))
        self.assertEqual(again.synthesize().dumps(), self.plan.dumps())
        events = EventSchedule.parse(["1 uc"], self.problem.table.uncontrollables())
        first, second = io.StringIO(), io.StringIO()
        self.pipeline.simulate(events)[0].toCsv(first)
        again.simulate(events)[0].toCsv(second)
        self.assertEqual(first.getvalue(), second.getvalue())


if __name__ == '__main__':
    unittest.main()
