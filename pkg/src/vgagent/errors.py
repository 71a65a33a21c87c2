"""Exception types raised across the package."""


class VGAgentError(Exception):
    """Base class for every error raised by vgagent."""


# world
class DegeneratePlane(VGAgentError):
    pass


class EmptyMesh(VGAgentError):
    pass


class Unreachable(VGAgentError):
    pass


class OutOfBounds(VGAgentError):
    pass


# semantic field
class EmptyMask(VGAgentError):
    pass


class TooFewMasks(VGAgentError):
    pass


class Diverged(VGAgentError):
    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class UnknownCluster(VGAgentError):
    pass


class EmptyScene(VGAgentError):
    pass


class ShapeMismatch(VGAgentError):
    pass


class EmptyGroundTruth(VGAgentError):
    pass


class NoVisibleView(VGAgentError):
    pass


# perception / motion
class InvalidDepth(VGAgentError):
    pass


class DegenerateSegment(VGAgentError):
    pass


# vlm protocol
class InconsistentContext(VGAgentError):
    pass


class MalformedJson(VGAgentError):
    pass


class MissingKey(VGAgentError):
    def __init__(self, name):
        super().__init__(f"missing key: {name!r}")
        self.name = name


class InvalidAction(VGAgentError):
    def __init__(self, value):
        super().__init__(f"action not in action_space: {value!r}")
        self.value = value


# benchmark
class InsufficientFreeSpace(VGAgentError):
    pass


class NoDetour(VGAgentError):
    pass


class EmptyResults(VGAgentError):
    pass
