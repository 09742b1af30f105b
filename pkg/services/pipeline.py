"""Report builders shared by the command line and the HTTP routes."""
import logging
from pathlib import Path
from typing import Final

from core.config import Settings, get_settings
from core.exceptions import NotFoundException, NotLInequalityException, ParseException
from model.index import (
    AlbaReport,
    CheckReport,
    ClassifyReport,
    InverseReport,
    KrachtReport,
    ModelVerdict,
    RoundtripReport,
    StageVerdict,
    WitnessOut,
)
from .alba import run_alba
from .classifier import InductiveWitness, classify_inequality, is_crypto_inductive, is_l_inequality
from .inverse import inverse_alba
from .kracht import kracht_pieces
from .oracle import Battery, FiniteDLE, build_battery, counterexample, holds, load_model, separating_models
from .signature import Signature, load_signature, parse_signature_file
from .syntax import (
    Ast,
    Inequality,
    Term,
    connectives_of,
    free_pure_vars,
    meta_and,
    parse,
    parse_inequality,
    render,
)
from .trace import Trace, TraceRecord

LOGGER: Final = logging.getLogger(__name__)

SIGNATURE_SUFFIX: Final = ".sig"


def resolve_signature(ref: str, settings: Settings | None = None) -> Signature:
    """A path, a name under the corpus signature directory, or inline declarations."""
    settings = settings or get_settings()
    if "\n" in ref or ref.lstrip().startswith(("f ", "g ", "#")):
        return parse_signature_file(ref)
    directory = settings.corpus_dir / "signatures"
    for candidate in (Path(ref), directory / ref, directory / f"{ref}{SIGNATURE_SUFFIX}"):
        if candidate.is_file():
            return load_signature(candidate)
    raise NotFoundException(f"Signature '{ref}' not found")


def list_signatures(settings: Settings | None = None) -> list[str]:
    directory = (settings or get_settings()).corpus_dir / "signatures"
    return sorted(p.stem for p in directory.glob(f"*{SIGNATURE_SUFFIX}")) if directory.is_dir() else []


def witness_out(w: InductiveWitness) -> WitnessOut:
    return WitnessOut(epsilon={k: v.value for k, v in w.epsilon.items()}, omega=list(w.omega),
                      label=w.label.value, definite=w.definite, text=w.describe())


def _records(trace: Trace | None) -> list[TraceRecord]:
    return list(trace.records) if trace is not None else []


def in_base(ineq: Inequality, sig: Signature) -> bool:
    return all(sig.is_base(c) for side in (ineq.lhs, ineq.rhs) for c in connectives_of(side))


def _l_inequality(text: str, sig: Signature) -> Inequality:
    ineq = parse_inequality(text, sig)
    if not is_l_inequality(ineq) or not in_base(ineq, sig):
        raise NotLInequalityException(f"Not an L-inequality: {render(ineq)}")
    return ineq


def classify(sig: Signature, text: str) -> ClassifyReport:
    ineq = parse_inequality(text, sig)
    if not is_l_inequality(ineq):
        return ClassifyReport(input=render(ineq), l_inequality=False,
                              summary="not an L-inequality (pure variables present)")
    result = classify_inequality(ineq)
    witnesses = [witness_out(w) for w in result.witnesses]
    summary = result.label.value
    crypto = None
    if not in_base(ineq, sig):
        found = is_crypto_inductive(ineq, sig)
        crypto = witness_out(found) if found else None
        summary += " in L*; " + ("crypto-inductive" if found else "not crypto-inductive")
    elif result.best is not None:
        summary += f"; {result.best.describe()}"
    return ClassifyReport(input=render(ineq), l_inequality=True, label=result.label.value,
                          witnesses=witnesses, crypto=crypto, summary=summary)


def alba(sig: Signature, text: str, trace: bool = False) -> AlbaReport:
    ineq = parse_inequality(text, sig)
    run = run_alba(ineq, sig, trace=trace)
    return AlbaReport(input=render(ineq), witness=witness_out(run.witness),
                      preprocessed=[render(x) for x in run.preprocessed],
                      quasi=[render(q.to_meta()) for q in run.quasi], output=render(run.output),
                      flags=list(run.flags), trace=_records(run.trace))


def to_kracht(sig: Signature, text: str, refined: bool = False, trace: bool = False) -> KrachtReport:
    ineq = _l_inequality(text, sig)
    log = Trace(enabled=trace)
    forms = kracht_pieces(ineq, sig, refined=refined, trace=log)
    return KrachtReport(input=render(ineq), pieces=[render(kf.to_meta()) for kf in forms], refined=refined,
                        trace=_records(log))


def inverse(sig: Signature, text: str, enforce_polarity: bool = True, trace: bool = False) -> InverseReport:
    mf = parse(text, sig)
    run = inverse_alba(mf, sig, enforce_polarity=enforce_polarity, trace=trace)
    return InverseReport(
        input=render(mf),
        kracht=render(run.kracht.to_meta()),
        compacted=[render(ineq) for _, ineq in run.compaction.disjuncts],
        pivot_free=render(run.pivot_free),
        very_simple=render(run.very_simple),
        inductive=render(run.inductive) if run.inductive is not None else None,
        witness=witness_out(run.witness) if run.witness is not None else None,
        flags=run.flags,
        trace=_records(run.trace),
    )


def _stage(battery: Battery, name: str, reference: Ast, ast: Ast, settings: Settings) -> StageVerdict:
    separating = separating_models(battery, reference, ast, settings)
    LOGGER.info("Stage %s: %s", name, "equivalent" if not separating else f"separated by {separating}")
    return StageVerdict(stage=name, formula=render(ast), equivalent=not separating, separating=separating)


def roundtrip(sig: Signature, text: str, settings: Settings | None = None, seed: int | None = None,
              trace: bool = False) -> RoundtripReport:
    """Forward to Kracht form and back, checking every stage against the input on the battery."""
    settings = settings or get_settings()
    ineq = _l_inequality(text, sig)
    battery = build_battery(sig, settings, seed)
    log = Trace(enabled=trace)
    run = run_alba(ineq, sig, trace=trace)
    log.extend(run.trace)
    forms = kracht_pieces(ineq, sig)
    inverses = [inverse_alba(kf.to_meta(), sig, trace=trace) for kf in forms]
    for r in inverses:
        log.extend(r.trace)
    stages = [
        _stage(battery, "alba", ineq, run.output, settings),
        _stage(battery, "kracht", ineq, meta_and(kf.to_meta() for kf in forms), settings),
        _stage(battery, "very-simple", ineq, meta_and(r.very_simple for r in inverses), settings),
    ]
    if all(r.inductive is not None for r in inverses):
        stages.append(_stage(battery, "inductive", ineq, meta_and(r.inductive for r in inverses), settings))
    else:
        stages.append(StageVerdict(stage="inductive", formula="", equivalent=False, separating=[]))
    return RoundtripReport(input=render(ineq), stages=stages, ok=all(s.equivalent for s in stages),
                           trace=_records(log))


def _formula(text: str, sig: Signature) -> Ast:
    ast = parse(text, sig)
    if isinstance(ast, Term):
        raise ParseException(f"Expected an inequality or a meta-formula: {text!r}")
    return ast


def check(sig: Signature, left: str, right: str, settings: Settings | None = None, seed: int | None = None,
          model_text: str | None = None) -> CheckReport:
    settings = settings or get_settings()
    a, b = _formula(left, sig), _formula(right, sig)
    models: list[FiniteDLE] = [load_model(model_text, sig, settings)] if model_text else list(
        build_battery(sig, settings, seed))
    verdicts = []
    for m in models:
        va, vb = holds(m, a, settings), holds(m, b, settings)
        witness = None
        if va != vb:
            refuted = b if va else a
            if isinstance(refuted, Inequality) and not free_pure_vars(refuted):
                witness = counterexample(m, refuted, settings)
        verdicts.append(ModelVerdict(model=m.name, left=va, right=vb, counterexample=witness))
    separating = [v.model for v in verdicts if v.left != v.right]
    return CheckReport(left=render(a), right=render(b), models=verdicts, equivalent=not separating,
                       separating=separating)


def text_report(report) -> str:
    """Human readable rendering of any report."""
    match report:
        case ClassifyReport():
            lines = [report.summary, *(f"witness: {w.text}  [{w.label}]" for w in report.witnesses)]
            if report.crypto is not None:
                lines.append(f"crypto witness: {report.crypto.text}")
            return "\n".join(lines)
        case AlbaReport():
            return "\n".join([f"witness: {report.witness.text}", *report.quasi, f"output: {report.output}"])
        case KrachtReport():
            return "\n".join(report.pieces)
        case InverseReport():
            lines = [f"kracht: {report.kracht}", *(f"compacted: {c}" for c in report.compacted),
                     f"pivot-free: {report.pivot_free}", f"very simple: {report.very_simple}"]
            lines.append(f"inductive: {report.inductive}" if report.inductive else f"flags: {', '.join(report.flags)}")
            return "\n".join(lines)
        case RoundtripReport():
            lines = [f"{s.stage}: {s.formula}  [{'ok' if s.equivalent else 'FAIL ' + ','.join(s.separating)}]"
                     for s in report.stages]
            return "\n".join(lines)
        case CheckReport():
            rows = [f"{v.model:>10}  {str(v.left):>5}  {str(v.right):>5}" for v in report.models]
            verdict = "equivalent" if report.equivalent else "separated by " + ", ".join(report.separating)
            return "\n".join([*rows, verdict])
    raise TypeError(report)

