"""Command line entry point: ``abelfun verify <suite|all>``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .suites import SUITES, WorkbenchConfig, emit_report, run
from .validation import ValidationError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def parse_range(text: str) -> list[int]:
    """``"2..5"``, ``"3"`` or ``"1,3,4"`` to a sorted list of genera."""
    out: set[int] = set()
    try:
        for part in text.split(","):
            if ".." in part:
                lo, hi = part.split("..")
                out.update(range(int(lo), int(hi) + 1))
            else:
                out.add(int(part))
    except ValueError:
        raise ValidationError(f"bad genus range {text!r}") from None
    if not out or min(out) < 1:
        raise ValidationError(f"bad genus range {text!r}")
    return sorted(out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="abelfun", description="Verification workbench for abelian function identities.")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("suite", choices=list(SUITES) + ["all"])
    v.add_argument("--config", help="JSON config file (default: $ABELFUN_CONFIG)")
    v.add_argument("--g", dest="genus", help="genus range, e.g. 2..5 or 1,3")
    v.add_argument("--seed", type=int)
    v.add_argument("--json", dest="json_path", help="write the JSON report here")
    v.add_argument("--format", choices=("table", "json"), default="table", help="stdout format")
    return p


def load_config(args) -> WorkbenchConfig:
    path = args.config or os.environ.get("ABELFUN_CONFIG")
    data = {}
    if path:
        cfg = WorkbenchConfig.from_file(path)
        data = {k: getattr(cfg, k) for k in WorkbenchConfig.__dataclass_fields__}
    if args.genus:
        data["genus"] = parse_range(args.genus)
    if args.seed is not None:
        data["seed"] = args.seed
    data["suites"] = list(SUITES) if args.suite == "all" else [args.suite]
    return WorkbenchConfig(**data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    records, status = run(cfg)
    print(emit_report(records, args.format))
    if args.json_path:
        Path(args.json_path).write_text(emit_report(records, "json") + "\n")
    return EXIT_FAIL if status else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
