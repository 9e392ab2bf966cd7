# src/netalgebra/modules/errors.py

from __future__ import annotations
from dataclasses import dataclass
from typing import List, Optional, Sequence


class NetAlgebraError(RuntimeError):
    """Base class for every error the package raises on purpose.

    ``kind`` is the short name printed by the CLI as ``ERROR <kind>: <detail>``.
    """

    kind_name: Optional[str] = None

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail

    @property
    def kind(self) -> str:
        return self.kind_name or type(self).__name__


# ---------------- network assembly / reduction ----------------
class DisconnectedNode(NetAlgebraError):
    pass


class DuplicateBranch(NetAlgebraError):
    pass


class DuplicateNode(NetAlgebraError):
    pass


class UnknownNode(NetAlgebraError):
    pass


class SelfLoopBranch(NetAlgebraError):
    pass


class NonpositiveInductance(NetAlgebraError):
    pass


class SingularIntermediateBlock(NetAlgebraError):
    pass


class SingularNetwork(NetAlgebraError):
    pass


class DimensionMismatch(NetAlgebraError):
    pass


# ---------------- devices / integration ----------------
class MissingFeedforwardInput(NetAlgebraError):
    pass


class NonFiniteDerivative(NetAlgebraError):
    pass


class NonFiniteState(NetAlgebraError):
    def __init__(self, detail: str, time: float) -> None:
        super().__init__(f"{detail} (t={time:.6g} s)")
        self.time = time


class NewtonDivergence(NetAlgebraError):
    def __init__(self, detail: str, residual: float, iterations: int) -> None:
        super().__init__(
            f"{detail} (residual={residual:.3e} after {iterations} iterations)"
        )
        self.residual = residual
        self.iterations = iterations


class InconsistentInitialState(NetAlgebraError):
    def __init__(self, detail: str, residual: float) -> None:
        super().__init__(f"{detail} (KCL residual={residual:.3e})")
        self.residual = residual


# ---------------- events / comparison / output ----------------
class UnknownTarget(NetAlgebraError):
    pass


class UnknownField(NetAlgebraError):
    pass


class UnknownSignal(NetAlgebraError):
    pass


class GridMismatch(NetAlgebraError):
    pass


class EmptySelection(NetAlgebraError):
    pass


class MalformedCsv(NetAlgebraError):
    pass


class IoError(NetAlgebraError):
    """A case file or trajectory could not be read or written."""


# ---------------- case parsing ----------------
class CaseSyntaxError(NetAlgebraError):
    kind_name = "SyntaxError"

    def __init__(self, detail: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {detail}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class CaseIssue:
    kind: str
    detail: str
    path: str = ""

    def __str__(self) -> str:
        where = f" at {self.path}" if self.path else ""
        return f"{self.kind}{where}: {self.detail}"


class SemanticError(NetAlgebraError):
    def __init__(self, issues: Sequence[CaseIssue]) -> None:
        self.issues: List[CaseIssue] = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    @property
    def kinds(self) -> List[str]:
        return [i.kind for i in self.issues]
