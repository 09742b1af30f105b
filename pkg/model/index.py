from pydantic import BaseModel, Field

from services.trace import TraceRecord


class ExprRequest(BaseModel):
    signature: str = Field(description="file name under corpus/signatures or inline declarations")
    expr: str
    trace: bool = False


class KrachtRequest(ExprRequest):
    refined: bool = False


class InverseRequest(ExprRequest):
    enforce_polarity: bool = True


class RoundtripRequest(ExprRequest):
    seed: int | None = None


class CheckRequest(ExprRequest):
    against: str
    seed: int | None = None


class WitnessOut(BaseModel):
    epsilon: dict[str, str]
    omega: list[tuple[str, str]]
    label: str
    definite: bool
    text: str


class ClassifyReport(BaseModel):
    input: str
    l_inequality: bool
    label: str | None = None
    witnesses: list[WitnessOut] = []
    crypto: WitnessOut | None = None
    summary: str


class AlbaReport(BaseModel):
    input: str
    witness: WitnessOut
    preprocessed: list[str]
    quasi: list[str]
    output: str
    flags: list[str] = []
    trace: list[TraceRecord] = []


class KrachtReport(BaseModel):
    input: str
    pieces: list[str]
    refined: bool
    trace: list[TraceRecord] = []


class InverseReport(BaseModel):
    input: str
    kracht: str
    compacted: list[str]
    pivot_free: str
    very_simple: str
    inductive: str | None = None
    witness: WitnessOut | None = None
    flags: list[str] = []
    trace: list[TraceRecord] = []


class StageVerdict(BaseModel):
    stage: str
    formula: str
    equivalent: bool
    separating: list[str] = []


class RoundtripReport(BaseModel):
    input: str
    stages: list[StageVerdict]
    ok: bool
    trace: list[TraceRecord] = []


class ModelVerdict(BaseModel):
    model: str
    left: bool
    right: bool
    counterexample: dict[str, str] | None = None


class CheckReport(BaseModel):
    left: str
    right: str
    models: list[ModelVerdict]
    equivalent: bool
    separating: list[str] = []
