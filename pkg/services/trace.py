"""Structured rule-application records and their JSON-lines emission."""
import logging
from typing import Final, Iterator

from pydantic import BaseModel, ConfigDict

from .syntax import Ast, render

LOGGER: Final = logging.getLogger(__name__)


class TraceRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    stage: str
    rule: str
    before: str
    after: str
    justification: str = ""

    def text(self) -> str:
        line = f"{self.step:>3}. [{self.stage}] {self.rule}: {self.before}  ~>  {self.after}"
        return f"{line}   ({self.justification})" if self.justification else line


def _show(x: Ast | str | list | tuple) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (list, tuple)):
        return " ; ".join(_show(item) for item in x)
    return render(x)


class Trace:
    """Append-only log of rule applications for one run."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.records: list[TraceRecord] = []

    def record(self, stage: str, rule: str, before, after, justification: str = "") -> None:
        if not self.enabled:
            return
        rec = TraceRecord(step=len(self.records) + 1, stage=stage, rule=rule,
                          before=_show(before), after=_show(after), justification=justification)
        LOGGER.debug("%s/%s: %s ~> %s", stage, rule, rec.before, rec.after)
        self.records.append(rec)

    def extend(self, other: "Trace") -> None:
        for rec in other.records:
            self.records.append(rec.model_copy(update={"step": len(self.records) + 1}))

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def rules(self) -> list[str]:
        return [r.rule for r in self.records]
