"""Exception types shared across the workbench."""


class WorkbenchError(Exception):
    """Base class for all domain errors."""


class MismatchedEndpoints(WorkbenchError):
    pass


class TrivialCircuit(WorkbenchError):
    pass


class ImageCollapsed(WorkbenchError):
    pass


class DomainMismatch(WorkbenchError):
    pass


class CollapsedEdge(WorkbenchError):
    def __init__(self, edges):
        super().__init__(f"edges with trivial image: {sorted(edges)}")
        self.edges = frozenset(edges)


class NotHomotopyEquivalence(WorkbenchError):
    pass


class NotIrreducible(WorkbenchError):
    pass


class NotInvariant(WorkbenchError):
    def __init__(self, level, witness=None):
        super().__init__(f"filtration level {level} is not invariant")
        self.level = level
        self.witness = witness


class NotEGEdge(WorkbenchError):
    pass


class NotEG(WorkbenchError):
    pass


class NoInteriorFixedPoint(WorkbenchError):
    pass


class NoFixedInitialDirection(WorkbenchError):
    pass


class NoSharedInitialDirection(WorkbenchError):
    pass


class PrefixTooShort(WorkbenchError):
    pass


class NotClosedINP(WorkbenchError):
    pass


class CrossingCountViolation(WorkbenchError):
    pass


class AttachingMapTrivial(WorkbenchError):
    pass


class BoundaryNotContained(WorkbenchError):
    pass


class UnsupportedRepresentation(WorkbenchError):
    pass


class NotCompletelySplit(WorkbenchError):
    def __init__(self, position, message=""):
        super().__init__(message or f"no valid term at position {position}")
        self.position = position


class Inconclusive(WorkbenchError):
    """Raised when a bounded search exhausts its budget without a verdict."""

    def __init__(self, message, budget=None):
        super().__init__(message)
        self.budget = budget
