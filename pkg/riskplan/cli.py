# -*- coding: utf-8 -*-
"""
Name: cli.py
Last Updated: 10/18/2026

Command line driver: tighten, checksat, plan, simulate and verify on a JSON
spec file. Every command writes its artifact to --out (or stdout) and exits
with the code of the error class that stopped it.
"""
import argparse
import json
import logging
import os
import sys
import time

from riskplan.errors import RiskPlanError
from riskplan import game
from riskplan import risk
from riskplan.planner import PlanningPipeline
from riskplan.runtime import EventSchedule, LineInjector, Trace
from riskplan.specFile import loadSpec

logger = logging.getLogger(__name__)

# attributes every LogRecord has; anything else came in through `extra`
_RECORD_FIELDS = set(vars(logging.LogRecord('', 0, '', 0, '', (), None))) | {'message', 'asctime'}


class JsonLinesFormatter(logging.Formatter):
    '''One JSON object per record with the structured extras next to the message.'''

    def format(self, record):
        payload = {'level': record.levelname, 'logger': record.name, 'message': record.getMessage()}
        for key, value in vars(record).items():
            if key not in _RECORD_FIELDS:
                payload[key] = value
        if record.exc_info:
            payload['exception'] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str, sort_keys=True)


def configureLogging(level = 'INFO', stream = None):
    '''Installs the JSON-lines handler on the riskplan logger.'''
    root = logging.getLogger('riskplan')
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JsonLinesFormatter())
    root.addHandler(handler)
    root.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    root.propagate = False
    return root


#%% Commands
def cmdTighten(problem, numThreads = 0):
    '''
    Parameters
    ----------------
     problem - (PlanningProblem)
     numThreads - (int) threads for the per-predicate checks

    Returns
    ----------------
     (report DataFrame, exit code) with exit code 0 iff every given constant holds
    '''
    report = risk.tightenAll(problem.riskPredicates(), problem.ws, problem.X, problem.method, numThreads)
    checked = report[report['c'].notna()]
    ok = bool(checked['holds'].fillna(False).astype(bool).all()) if len(checked) else True
    return report, 0 if ok else 1


def cmdChecksat(problem, variant = game.PI_HAT, maxStates = None):
    '''Verdict and statistics of the satisfiability check.'''
    started = time.time()
    result = PlanningPipeline(problem, maxStates).checkSatisfiable(variant)
    summary = {'sat': result.sat, 'reason': result.reason}
    summary.update(result.stats)
    summary['seconds'] = round(time.time() - started, 3)
    return summary, 0 if result.sat else 1


def cmdPlan(problem, maxStates = None):
    '''The initial plan as JSON; NoPlan escapes for unsatisfiable problems.'''
    pipeline = PlanningPipeline(problem, maxStates)
    plan = pipeline.synthesize()
    return plan.toJson(), 0


def cmdSimulate(problem, events = None, maxStates = None, hook = None):
    '''
    Returns
    ----------------
     (Trace, VerifyReport, exit code)
    '''
    pipeline = PlanningPipeline(problem, maxStates)
    trace, plan = pipeline.simulate(events, problem.lassoPeriods, hook)
    report = pipeline.verify(trace)
    return trace, report, 0 if report.ok else 1


def cmdVerify(problem, tracePath):
    pipeline = PlanningPipeline(problem)
    pipeline.determinize()
    symbols = [pipeline.detTable.symbolOf(p) for p in sorted(pipeline.oracle.predicates)]
    trace = Trace.fromCsv(tracePath, symbols, problem.table.uncontrollables())
    report = pipeline.verify(trace)
    return report.toDict(), 0 if report.ok else 1


#%% Entry point
def buildParser():
    parser = argparse.ArgumentParser(prog='riskplan', description='Risk-aware reactive temporal logic planning.')
    parser.add_argument('--log-level', default='INFO')
    commands = parser.add_subparsers(dest='command', required=True)
    for name, text in (('tighten', 'check and suggest tightening constants'),
                       ('checksat', 'decide satisfiability'),
                       ('plan', 'synthesize the initial plan'),
                       ('simulate', 'execute the plan in closed loop'),
                       ('verify', 'check a recorded trace')):
        sub = commands.add_parser(name, help=text)
        sub.add_argument('--spec', required=True)
        sub.add_argument('--out', default=None, help='directory for the artifacts, stdout when omitted')
        sub.add_argument('--seed', type=int, default=None)
        sub.add_argument('--mc-samples', type=int, default=None)
        sub.add_argument('--lasso-periods', type=int, default=None)
        sub.add_argument('--zeta', default=None)
        sub.add_argument('--max-states', type=int, default=None)
        sub.add_argument('--threads', type=int, default=0)
        if name == 'checksat':
            sub.add_argument('--variant', choices=(game.PI, game.PI_HAT), default=game.PI_HAT)
        if name == 'simulate':
            source = sub.add_mutually_exclusive_group()
            source.add_argument('--events', default=None, help="events file of 't symbol' lines, '-' for stdin")
            source.add_argument('--interactive', action='store_true',
                                help="read 't symbol' lines from stdin while the run goes on")
        if name == 'verify':
            sub.add_argument('--trace', required=True)
    return parser


def _emit(out, filename, text):
    if out is None:
        sys.stdout.write(text if text.endswith('\n') else text + '\n')
        return
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, filename), 'w') as handle:
        handle.write(text if text.endswith('\n') else text + '\n')


def run(args):
    problem = loadSpec(args.spec).override(args.seed, args.mc_samples, args.lasso_periods, args.zeta)
    if args.command == 'tighten':
        report, code = cmdTighten(problem, args.threads)
        _emit(args.out, 'tighten.csv', report.to_csv(index=False))
    elif args.command == 'checksat':
        summary, code = cmdChecksat(problem, args.variant, args.max_states)
        _emit(args.out, 'checksat.json', json.dumps(summary, indent=2, sort_keys=True))
    elif args.command == 'plan':
        plan, code = cmdPlan(problem, args.max_states)
        _emit(args.out, 'plan.json', json.dumps(plan, indent=2, sort_keys=True))
    elif args.command == 'simulate':
        events = EventSchedule()
        if args.events is not None:
            events = EventSchedule.load(args.events, problem.table.uncontrollables())
        hook = LineInjector(sys.stdin, problem.table.uncontrollables()) if args.interactive else None
        trace, report, code = cmdSimulate(problem, events, args.max_states, hook)
        if args.out is None:
            trace.toCsv(sys.stdout)
        else:
            os.makedirs(args.out, exist_ok=True)
            trace.toCsv(os.path.join(args.out, 'trace.csv'))
        _emit(args.out, 'verdict.json', json.dumps(report.toDict(), indent=2, sort_keys=True, default=str))
    else:
        report, code = cmdVerify(problem, args.trace)
        _emit(args.out, 'verify.json', json.dumps(report, indent=2, sort_keys=True, default=str))
    return code


def main(argv = None):
    args = buildParser().parse_args(argv)
    configureLogging(args.log_level)
    try:
        return run(args)
    except RiskPlanError as err:
        logger.error(str(err), extra={'event': 'failure', 'error': type(err).__name__, 'exit_code': err.exitCode})
        return err.exitCode


if __name__ == '__main__':
    sys.exit(main())
