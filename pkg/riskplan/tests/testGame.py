import random
import unittest
from itertools import combinations

from riskplan import formula as fm
from riskplan import game
from riskplan import transducer as td
from riskplan.errors import TooManyUncontrollables, InputError
from riskplan.feasibility import FeasibilityOracle, makeCube
from riskplan.risk import Affine, DeterministicPredicate, Workspace


def oracleFor(uncontrollables = ()):
    table = fm.SymbolTable()
    table.add('a', table.DET, DeterministicPredicate(Affine((1, 0), (0,), 0), 2))
    table.add('b', table.DET, DeterministicPredicate(Affine((1, 0), (0,), 0), 5))
    for u in uncontrollables:
        table.add(u, table.UNCONTROLLABLE)
    return FeasibilityOracle(table, Workspace([0, 0], [10, 10]), [0])


class testEvents(unittest.TestCase):

    def testAssignments(self):
        self.assertEqual(game.eventAssignments(['b', 'a']),
                         [frozenset(), frozenset({'a'}), frozenset({'b'}), frozenset({'a', 'b'})])
        self.assertEqual(game.eventAssignments([]), [game.NO_EVENTS])
        with self.assertRaises(TooManyUncontrollables):
            game.eventAssignments(['u{}'.format(k) for k in range(game.MAX_UNCONTROLLABLES + 1)])

    def testEventTransitions(self):
        fire = td.Transition('I', 'I', makeCube({'uc': True, 'p1': False}))
        quiet = td.Transition('I', 'I', makeCube({'uc': False, 'p1': True}), (td.ClockAtom('x', '>=', 2),))
        self.assertTrue(game.isEventTransition(fire, {'uc'}))
        self.assertFalse(game.isEventTransition(quiet, {'uc'}))
        exempt = game.zenoExempt(['uc'])
        self.assertTrue(exempt(fire))
        self.assertTrue(exempt(quiet))
        self.assertFalse(exempt(td.Transition('I', 'I', makeCube({'uc': False}))))


class testSatisfiability(unittest.TestCase):

    def testPredicate(self):
        result = game.checkSatisfiable(fm.Atom('p1'), oracleFor())
        self.assertTrue(result.sat)
        self.assertEqual(result.reason, 'initial state wins')
        self.assertEqual(result.winning.variant, game.PI_HAT)
        self.assertIn(result.dra.initial, result.winning)
        self.assertIsNotNone(result.winning.hint(result.dra.initial))
        for key in ('states', 'regions', 'degeneralized', 'winning'):
            self.assertGreater(result.stats[key], 0)

    def testPrunedAway(self):
        ##
        # x1 < 2 and x1 >= 5 at time 0
        ##
        result = game.checkSatisfiable(fm.And(fm.Not(fm.Atom('p1')), fm.Atom('p2')), oracleFor())
        self.assertFalse(result)
        self.assertTrue(result.reason.startswith('initial transition pruned'))

    def testEventsCannotBeDemanded(self):
        ##
        # The environment decides when uc is true, so asking for it at time 0 fails
        ##
        oracle = oracleFor(['uc'])
        demanded = game.checkSatisfiable(fm.Atom('uc'), oracle, ['uc'], 2)
        self.assertFalse(demanded.sat)
        ##
        # Waiting for it to stay quiet at time 0 wins under both predecessors
        ##
        for variant in (game.PI, game.PI_HAT):
            quiet = game.checkSatisfiable(fm.Not(fm.Atom('uc')), oracle, ['uc'], 2, variant=variant)
            self.assertTrue(quiet.sat)
            self.assertEqual(quiet.winning.variant, variant)

    def testPredecessor(self):
        result = game.checkSatisfiable(fm.Atom('p1'), oracleFor())
        everything = set(range(len(result.dra)))
        ##
        # Every state of a pruned automaton has some edge to answer bottom with
        ##
        self.assertEqual(game.controllablePredecessor(everything, result.dra, oracleFor()), everything)
        self.assertEqual(game.controllablePredecessor(set(), result.dra, oracleFor()), set())
        self.assertEqual(result.winning.states, frozenset(everything))
        with self.assertRaises(InputError):
            game.controllablePredecessor(everything, result.dra, oracleFor(), 'pi_star')


def randomFormula(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(['p1', 'p2', 'uc'])
    kind = rng.choice(['not', 'and', 'F', 'O', 'G', 'U'])
    if kind == 'not':
        return '!({})'.format(randomFormula(rng, depth - 1))
    if kind in ('F', 'O'):
        return '{}(0,{}) ({})'.format(kind, rng.choice(['1', '2']), randomFormula(rng, depth - 1))
    if kind == 'G':
        return 'G[0,inf) ({})'.format(randomFormula(rng, depth - 1))
    left, right = randomFormula(rng, depth - 1), randomFormula(rng, depth - 1)
    if kind == 'and':
        return '({}) & ({})'.format(left, right)
    return '({}) U(0,inf) ({})'.format(left, right)


class testFixedPoint(unittest.TestCase):
    '''Winning sets of small random formulas over two predicates and one event with zeta 2.'''

    @classmethod
    def setUpClass(cls):
        rng = random.Random(181026)
        cls.oracle = oracleFor(['uc'])
        cls.cases = []
        for _ in range(400):
            text = randomFormula(rng, 2)
            result = game.checkSatisfiable(fm.rewriteToBase(fm.parse(text)), cls.oracle, ['uc'], 2, variant=game.PI)
            if result.dra is not None:
                cls.cases.append((text, result))
            if len(cls.cases) == 50:
                break

    def testMonotoneChain(self):
        self.assertEqual(len(self.cases), 50)
        for text, result in self.cases:
            winning = result.winning
            chain = winning.chain
            self.assertEqual(chain[0], len(result.dra), text)
            self.assertTrue(all(a >= b for a, b in zip(chain, chain[1:])), text)
            self.assertEqual(chain[-1], len(winning), text)
            ##
            # The limit answers every admissible event from inside itself
            ##
            cpre = game.controllablePredecessor(set(winning.states), result.dra, self.oracle, game.PI, winning.moves)
            self.assertLessEqual(set(winning.states), cpre, text)

    def testHatIsStricter(self):
        rng = random.Random(7)
        for text, result in self.cases:
            hat = game.winningSet(result.dra, self.oracle, game.PI_HAT)
            self.assertLessEqual(hat.states, result.winning.states, text)
            everything = list(range(len(result.dra)))
            for _ in range(3):
                W = set(rng.sample(everything, rng.randint(0, len(everything))))
                strict = game.controllablePredecessor(W, result.dra, self.oracle, game.PI_HAT, hat.moves)
                loose = game.controllablePredecessor(W, result.dra, self.oracle, game.PI, result.winning.moves)
                self.assertLessEqual(strict, loose, text)

    def testHintsAnswerEvents(self):
        fired = frozenset({'uc'})
        for text, result in self.cases:
            dra, winning = result.dra, result.winning
            moves = winning.moves
            for q in winning.states:
                for s in moves.admissible[q]:
                    k = winning.hint(q, s)
                    self.assertIsNotNone(k, text)
                    self.assertIn(dra.edges[q][k][2], winning.states, text)
                    self.assertTrue(any(kk == k and s in ss for kk, target, ss in moves.served[q]), text)
            if dra.initial not in winning:
                continue
            ##
            # Following the hints stays winning under every schedule of at most two events in eight steps
            ##
            for count in range(3):
                for steps in combinations(range(8), count):
                    q = dra.initial
                    for step in range(8):
                        s = fired if step in steps and fired in moves.admissible[q] else game.NO_EVENTS
                        q = dra.edges[q][winning.hint(q, s)][2]
                        self.assertIn(q, winning.states, text)


if __name__ == '__main__':
    unittest.main()
