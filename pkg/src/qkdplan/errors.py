"""Exception hierarchy shared by the planner and the CLI."""


class QkdPlanError(Exception):
    """Base class for all planner errors."""


class InputError(QkdPlanError, ValueError):
    """Malformed or invalid input (documents, parameters, ids)."""


class InfeasibleError(QkdPlanError):
    """No plan can satisfy the demand with the available QKD options."""
