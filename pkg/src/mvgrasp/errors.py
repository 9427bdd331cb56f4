"""Exception types shared across the pipeline.

Everything raised on bad *data* derives from PipelineError so the CLI can
map it to a single exit code; bad *arguments* raise plain ValueError.
"""


class PipelineError(Exception):
    """Base class for data-level failures (unreadable files, degenerate
    geometry, empty inputs). CLI exit code 3."""


class ParseError(PipelineError):
    """A file could not be parsed. Carries the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FormatError(PipelineError):
    """A serialized document has the wrong schema or version."""


class EmptyCloudError(PipelineError):
    """Operation requires at least one point."""


class DegenerateGeometryError(PipelineError):
    """Point configuration too degenerate for the requested operation
    (collinear points, zero-extent bounding box, too few neighbors)."""


class EmptyViewError(PipelineError):
    """Depth view has no occupied bin."""


class EmptyFeatureError(PipelineError):
    """Feature row is all zero and cannot be normalized."""


class UnknownCategoryError(PipelineError):
    """Label not present in the knowledge base."""


class NoKnowledgeError(PipelineError):
    """Knowledge base has no categories yet; caller should teach first."""


class EmptyMapError(PipelineError):
    """Grasp map quality grid has no finite value."""


class EmptyNeighborhoodError(PipelineError):
    """No occupied bin within the requested neighborhood of a grasp point."""


class NoValidGraspError(PipelineError):
    """No collision-free grasp candidate was found. CLI exit code 4."""
