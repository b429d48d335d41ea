"""Command-line entry point: one-shot review runs and the live service.

``medreview review`` evaluates one patient file end to end and writes the
alert and view-model JSON files; ``medreview serve`` starts the multi-user
service. Both load the packaged fixture knowledge base unless told
otherwise.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .knowledge import Knowledge, fixture_dir, load_knowledge
from .patient import (PatientError, active_preconizations, import_patient,
                      infer_indications, load_record)
from .rules import RuleError, evaluate_comparative
from .terminology import TerminologyError
from .textextract import annotate, ingest_annotations
from .views import compute_views


def _knowledge_from_args(args) -> Knowledge:
    return load_knowledge(
        base_dir=args.fixtures,
        terminology_path=args.terminology,
        rules_path=args.rules,
        drugdb_path=args.drugdb,
        interactions_path=args.interactions,
        lexicon_path=args.lexicon,
    )


def _dump(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _palette_metadata(knowledge: Knowledge, color_blind: bool) -> dict:
    key = "color_blind" if color_blind else "color"
    return {
        "mode": "color_blind" if color_blind else "color",
        "categories": [{"index": c["index"], "name": c["name"], "color": c[key]}
                       for c in knowledge.palette["categories"]],
        "severities": {k: v[key] for k, v in knowledge.palette["severities"].items()},
        "statuses": {k: v[key] for k, v in knowledge.palette["statuses"].items()},
        "markers": {k: v[key] for k, v in knowledge.palette["markers"].items()},
    }


def cmd_review(args) -> int:
    try:
        knowledge = _knowledge_from_args(args)
    except (TerminologyError, RuleError, OSError, ValueError) as exc:
        print(f"error: cannot load knowledge fixtures: {exc}", file=sys.stderr)
        return 1

    patient_path = Path(args.patient)
    try:
        raw = json.loads(patient_path.read_text(encoding="utf-8"))
        if "revision" in raw:
            record = load_record(patient_path)
        else:
            record = import_patient(raw, knowledge.drug_db, knowledge.terminology,
                                    patient_id=patient_path.stem)
    except (PatientError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {patient_path}: {exc}", file=sys.stderr)
        return 1

    if knowledge.lexicon is not None:
        for text in record.texts:
            ingest_annotations(annotate(text, knowledge.lexicon), record, author="text-extract")
    infer_indications(record, knowledge.drug_db, knowledge.terminology)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    views = compute_views(record, knowledge)
    diff = evaluate_comparative(knowledge.evaluator, record, knowledge.drug_db)
    comparative = bool(active_preconizations(record))
    palette = _palette_metadata(knowledge, args.color_blind)

    _dump(out_dir / "alerts.json", {**diff.to_dict(), "palette": palette["statuses"]})
    _dump(out_dir / "glyph_pre.json",
          {**views["adverse_effects"]["glyph_pre"], "palette": palette["categories"]})
    _dump(out_dir / "interactions_pre.json",
          {**views["interactions"]["pre"], "ranked": views["interactions"]["ranked"],
           "palette": palette["severities"]})
    _dump(out_dir / "posology.json", views["posologies"]["pre"])
    if comparative:
        _dump(out_dir / "glyph_post.json",
              {**views["adverse_effects"]["glyph_post"], "palette": palette["categories"]})
        _dump(out_dir / "interactions_post.json",
              {**views["interactions"]["post"],
               "ranked": views["interactions"]["ranked_post"],
               "palette": palette["severities"]})
        _dump(out_dir / "posology_post.json", views["posologies"]["post"])

    notes = diff.to_dict()["notes"]
    for note in notes:
        print(f"data-quality: {note['rule_id']} [{note['phase']}]: {note['reason']}",
              file=sys.stderr)
    print(f"review written to {out_dir} "
          f"({len(diff.rows)} drug rows, {len(notes)} data-quality notes)")
    return 2 if notes else 0


def cmd_serve(args) -> int:
    try:
        knowledge = _knowledge_from_args(args)
    except (TerminologyError, RuleError, OSError, ValueError) as exc:
        print(f"error: cannot load knowledge fixtures: {exc}", file=sys.stderr)
        return 1
    try:
        tokens = _load_tokens(args.tokens)
    except (OSError, ValueError) as exc:
        print(f"error: cannot load token config: {exc}", file=sys.stderr)
        return 1

    from .server import create_app
    import socket
    import uvicorn

    app = create_app(knowledge, tokens, data_dir=args.data_dir)
    host, _, port = args.listen.rpartition(":")
    host = host or "127.0.0.1"
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.bind((host, int(port)))
        probe.close()
    except (OSError, ValueError) as exc:
        print(f"error: cannot listen on {args.listen}: {exc}", file=sys.stderr)
        return 1
    print(f"medreview service ready on http://{host}:{port}", flush=True)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


def _load_tokens(path: str | None) -> dict[str, tuple[str, str]]:
    """Token config: {"token": {"user": ..., "role": pharmacist|gp|observer}}."""
    if path is None:
        return {"pharmacist-token": ("pharmacist", "pharmacist"), "gp-token": ("gp", "gp")}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    out = {}
    for token, entry in data.items():
        out[token] = (entry["user"], entry["role"])
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medreview",
                                     description="medication review decision support")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_fixture_flags(p):
        p.add_argument("--fixtures", default=None,
                       help=f"fixture directory (default: packaged, {fixture_dir()})")
        p.add_argument("--terminology", default=None, help="terminology TSV path")
        p.add_argument("--rules", default=None, help="rule corpus path")
        p.add_argument("--drugdb", default=None, help="drug database JSON path")
        p.add_argument("--interactions", default=None, help="interaction TSV path")
        p.add_argument("--lexicon", default=None, help="extraction lexicon TSV path")

    review = sub.add_parser("review", help="run a one-shot review on a patient file")
    add_fixture_flags(review)
    review.add_argument("patient", help="patient import file or saved record (JSON)")
    review.add_argument("--out", default="review-out", help="output directory")
    review.add_argument("--color-blind", action="store_true",
                        help="emit the gray palette metadata instead of colors")
    review.set_defaults(func=cmd_review)

    serve = sub.add_parser("serve", help="run the collaborative review service")
    add_fixture_flags(serve)
    serve.add_argument("--listen", default="127.0.0.1:8470", help="host:port to listen on")
    serve.add_argument("--data-dir", default=None, help="directory for per-patient records")
    serve.add_argument("--tokens", default=None,
                       help="JSON token config (default: built-in demo tokens)")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
