# -*- coding: utf-8 -*-
"""
Name: errors.py
Last Updated: 10/18/2026

Exception classes raised across the riskplan package.
Every class carries the process exit code the command line driver uses
when the exception escapes a command:
    0 - success / SAT
    1 - UNSAT or no plan
    2 - input error
    3 - internal invariant breach
"""


class RiskPlanError(Exception):
    exitCode = 3


##
# Input errors (exit code 2)
##
class InputError(RiskPlanError):
    exitCode = 2


class FormulaSyntaxError(InputError):
    def __init__(self, message, position = None):
        self.position = position
        if position is not None:
            message = "{} (at position {})".format(message, position)
        super().__init__(message)


class UnknownSymbol(InputError):
    pass


class SingletonInterval(InputError):
    pass


class UnsupportedInterval(InputError):
    pass


class ClosedFormUnavailable(InputError):
    pass


class DimensionTooLarge(InputError):
    pass


class TooManyUncontrollables(InputError):
    pass


class SpecFileError(InputError):
    pass


class InsufficientHorizon(InputError):
    pass


class AssumptionViolated(InputError):
    def __init__(self, message, offenders = ()):
        self.offenders = list(offenders)
        super().__init__(message)


##
# Unsatisfiable specifications (exit code 1)
##
class Unsatisfiable(RiskPlanError):
    exitCode = 1


class NoPlan(Unsatisfiable):
    pass


class InitialStateRemoved(Unsatisfiable):
    pass


class EmptyInitialSet(Unsatisfiable):
    pass


class InfeasibleFromX0(Unsatisfiable):
    pass


class UnsatisfiableThreshold(Unsatisfiable):
    pass


##
# Internal invariant breaches (exit code 3)
##
class AlphabetMismatch(RiskPlanError):
    pass


class UnrealizablePath(RiskPlanError):
    pass


class ControllerMiss(RiskPlanError):
    pass


class RegionBoundExceeded(RiskPlanError):
    pass
