"""Command line front end: ``dle-correspond <command> --sig FILE --expr STR``."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Final, Sequence

from core.config import get_settings
from core.exceptions import AppException, ParseException
from core.log import configure_logging
from services import pipeline

LOGGER: Final = logging.getLogger("cli")

COMMANDS: Final = ("classify", "alba", "to-kracht", "inverse", "roundtrip", "check")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dle-correspond",
                                     description="Forward and inverse correspondence for DLE logics.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--sig", required=True, help="signature file, corpus name or inline declarations")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--expr", help="inequality or meta-formula")
    source.add_argument("--in", dest="infile", type=Path, help="file holding the input")
    parser.add_argument("--against", help="second formula for 'check'")
    models = parser.add_mutually_exclusive_group()
    models.add_argument("--model", type=Path, help="model dump for 'check'")
    models.add_argument("--battery", action="store_true", help="check against the battery (default)")
    parser.add_argument("--emit", choices=("text", "structured"), default="text")
    parser.add_argument("--trace", action="store_true", help="include rule applications")
    parser.add_argument("--seed", type=int, help="battery seed")
    parser.add_argument("--refined", action="store_true", help="refine Kracht forms ('to-kracht')")
    parser.add_argument("--no-polarity-check", action="store_true",
                        help="skip the disjunct polarity check ('inverse')")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _read_input(args: argparse.Namespace) -> str:
    if args.expr is not None:
        return args.expr
    return args.infile.read_text(encoding="utf-8").strip()


def run(args: argparse.Namespace) -> tuple[object, int]:
    settings = get_settings()
    if args.seed is not None:
        settings = settings.model_copy(update={"battery_seed": args.seed})
    sig = pipeline.resolve_signature(args.sig, settings)
    text = _read_input(args)
    match args.command:
        case "classify":
            return pipeline.classify(sig, text), 0
        case "alba":
            return pipeline.alba(sig, text, trace=args.trace), 0
        case "to-kracht":
            return pipeline.to_kracht(sig, text, refined=args.refined, trace=args.trace), 0
        case "inverse":
            report = pipeline.inverse(sig, text, enforce_polarity=not args.no_polarity_check, trace=args.trace)
            return report, 0
        case "roundtrip":
            report = pipeline.roundtrip(sig, text, settings, trace=args.trace)
            return report, 0 if report.ok else 1
        case "check":
            if args.against is None:
                raise ParseException("'check' needs --against")
            model_text = args.model.read_text(encoding="utf-8") if args.model else None
            report = pipeline.check(sig, text, args.against, settings, model_text=model_text)
            return report, 0 if report.equivalent else 1
    raise ValueError(args.command)


def emit(command: str, report, structured: bool, trace: bool) -> str:
    records = getattr(report, "trace", []) if trace else []
    if structured:
        lines = [r.model_dump_json() for r in records]
        result = report.model_dump(mode="json", exclude={"trace"})
        lines.append(json.dumps({"command": command, "result": result}, sort_keys=True, ensure_ascii=False))
        return "\n".join(lines)
    lines = [r.text() for r in records]
    lines.append(pipeline.text_report(report))
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging("DEBUG" if args.verbose else get_settings().log_level)
    try:
        report, code = run(args)
    except AppException as e:
        LOGGER.debug("Command %s failed", args.command, exc_info=True)
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(emit(args.command, report, args.emit == "structured", args.trace))
    return code


if __name__ == "__main__":
    sys.exit(main())
