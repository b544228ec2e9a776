# -*- coding: utf-8 -*-
"""
Name: runPlanner.py
Last Updated: 10/18/2026

This script runs the whole riskplan pipeline on the bundled example: it checks the
tightening constants, decides satisfiability for two event separations, synthesizes
the initial plan, simulates it with one uncontrollable event and verifies the trace.
"""
import os

from riskplan.cli import configureLogging, cmdTighten
from riskplan.planner import PlanningPipeline
from riskplan.runtime import EventSchedule
from riskplan.specFile import loadSpec

#%% Load the example (Change this to whatever spec file you want)
configureLogging('INFO')
specPath = os.path.join(os.path.dirname(__file__), 'data', 'reachAvoidEvent.json')
problem = loadSpec(specPath)

#%% Tightening constants
##
# One row per risk predicate: the given c, whether the inclusion holds and the smallest c that would
##
report, code = cmdTighten(problem)
print(report[['symbol', 'measure', 'beta', 'c', 'holds', 'margin', 'suggested_c']])

#%% Satisfiability
##
# Events may come 1 time unit apart: reaching r2 within 3 units cannot be guaranteed
##
print(PlanningPipeline(problem.override(zeta = 1)).checkSatisfiable().reason)
##
# 5 time units apart: satisfiable
##
pipeline = PlanningPipeline(problem)
print(pipeline.checkSatisfiable().reason)

#%% Plan, simulate with an event at t=1, verify
plan = pipeline.synthesize()
print(plan.toFrame())
events = EventSchedule.parse(["1 uc"], problem.table.uncontrollables())
trace, revised = pipeline.simulate(events)
print(revised.toFrame())
print(pipeline.verify(trace).toDict())
