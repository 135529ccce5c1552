#  Copyright (c) "ACP-HOI Authors"
#  #
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#  #
#      https://www.apache.org/licenses/LICENSE-2.0
#  #
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
from __future__ import annotations

from typing import Optional

from pydantic_core import ErrorDetails


class AcpError(Exception):
    """Global exception used for the acp-hoi package."""

    pass


class AnnotationParseError(AcpError):
    """Exception raised when an annotation file cannot be parsed."""

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ) -> None:
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column


class VocabularyError(AcpError):
    """Exception raised when an action or object name is not in the vocabulary."""

    def __init__(self, kind: str, name: str) -> None:
        super().__init__(f"Unknown {kind} name: {name!r}")
        self.kind = kind
        self.name = name


class HoiSpaceValidationError(AcpError):
    """Exception raised when a label space definition is invalid."""

    def __init__(self, errors: list[ErrorDetails]) -> None:
        super().__init__(f"Label space validation failed: {errors}")
        self.errors = errors


class PriorFileError(AcpError):
    """Exception raised when a prior file cannot be read or written."""

    pass


class AnchorSelectionError(AcpError):
    """Exception raised when anchor selection is asked for an impossible result."""

    pass


class AnchorConflictError(AcpError):
    """Exception raised when a label set contains more than one anchor action."""

    def __init__(self, anchors: list[str]) -> None:
        super().__init__(
            f"Label set contains several mutually exclusive anchors: {anchors}"
        )
        self.anchors = anchors


class PartitionFileError(AcpError):
    """Exception raised when a partition file is malformed."""

    pass


class PartitionRequiredError(AcpError):
    """Exception raised when a model variant needs an anchor partition."""

    pass


class ShapeMismatchError(AcpError):
    """Exception raised when array shapes do not agree."""

    pass


class NonFiniteError(AcpError):
    """Exception raised when a NaN or infinite value shows up in a computation."""

    pass


class LossInputError(AcpError):
    """Exception raised when a loss receives targets outside [0, 1]."""

    pass


class ProjectionInputError(AcpError):
    """Exception raised when a probability vector to project is outside [0, 1]."""

    pass


class CheckpointError(AcpError):
    """Exception raised when a checkpoint or tensor file cannot be read."""

    pass


class GradientCheckError(AcpError):
    """Exception raised when analytic and numerical gradients disagree."""

    def __init__(self, max_error: float, tolerance: float) -> None:
        super().__init__(
            f"Gradient check failed: max relative error {max_error:.3e} > {tolerance:.1e}"
        )
        self.max_error = max_error
        self.tolerance = tolerance


class EvaluationError(AcpError):
    """Exception raised for inconsistent detections or ground truth."""

    pass


class ZeroShotSplitError(AcpError):
    """Exception raised when too few classes are eligible for a zero-shot split."""

    pass


class SynthConfigError(AcpError):
    """Exception raised when a synthetic benchmark cannot be generated."""

    pass


class ConfigValidationError(AcpError):
    """Exception raised when an experiment configuration is invalid."""

    def __init__(self, errors: list[ErrorDetails]) -> None:
        super().__init__(f"Configuration validation failed: {errors}")
        self.errors = errors


class ConfigFileError(AcpError):
    """Exception raised when a configuration file cannot be parsed."""

    pass


class TrainingDivergedError(AcpError):
    """Exception raised when the training loss becomes non-finite."""

    def __init__(self, message: str, dump_path: Optional[str] = None) -> None:
        super().__init__(message)
        self.dump_path = dump_path


class PipelineDefinitionError(AcpError):
    """Raised when the experiment pipeline graph is invalid"""

    pass


class PipelineMissingDependencyError(AcpError):
    """Raised when a stage is scheduled but its dependencies are not yet done"""

    pass


class PipelineStatusUpdateError(AcpError):
    """Raised when trying an invalid change of state (e.g. DONE => RUNNING)"""

    pass


class RecipeError(AcpError):
    """Raised when an ablation recipe name is unknown"""

    pass
