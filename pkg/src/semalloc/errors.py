"""Exception types shared across the package."""

from __future__ import annotations


class SemallocError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(SemallocError):
    """A problem definition references something that does not exist or is malformed."""


class SchemaError(ConfigurationError):
    """A problem document violates the JSON schema; message carries a JSON pointer."""


class ValidationFailure(SemallocError):
    """A constructed instance violates model invariants."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(self.violations))


class InfeasibleError(SemallocError):
    """A deterministic program has no feasible plan for some VSP."""

    def __init__(self, vsp: int, message: str):
        self.vsp = vsp
        super().__init__(message)


class NodeLimitError(SemallocError):
    """The branch-and-bound node budget was exhausted before proving optimality.

    Carries the best incumbent assembled so far (``partial``) and the indices of
    the VSP subproblems whose search was cut short.  The partial solution is a
    feasible plan but must not be treated as optimal.
    """

    def __init__(self, partial, incomplete_vsps, node_limit: int):
        self.partial = partial
        self.incomplete_vsps = tuple(incomplete_vsps)
        self.node_limit = node_limit
        super().__init__(
            f"node limit {node_limit} exceeded for VSP subproblem(s) "
            f"{list(self.incomplete_vsps)}; best incumbent attached"
        )
