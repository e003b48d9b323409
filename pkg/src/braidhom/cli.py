"""Command-line surface.

Subcommands compute the homology tables, spectral-sequence pages, detection
reports, and oracle polynomials for a closed braid given as ``"b;g1,g2,..."``.
Exit codes: 0 success, 1 usage error, 2 resource limit, 3 a structural
invariant failed (for the check subcommands, a failed check).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import __version__
from .analysis import (
    detect_unlink,
    euler_series,
    hilbert_P_B,
    qhat_polynomial,
)
from .braid import build_marked_diagram, closure_stats, parse_braid_word
from .errors import (
    InvariantViolationError,
    ResourceLimitError,
    UsageError,
)
from .mfbuild import assemble
from .oracle import homfly_series, jones_kauffman
from .pipeline import (
    Engine,
    EngineConfig,
    e2_table,
    homfly_table,
    khovanov_table,
    markov_invariance_report,
    verify_homotopy_identity,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RESOURCE = 2
EXIT_INVARIANT = 3

SUBCOMMANDS = (
    "homfly",
    "e2",
    "khovanov",
    "hilbert",
    "detect-unlink",
    "euler-check",
    "skein",
    "jones",
    "verify-homotopy",
    "markov-check",
)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="braidhom", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--braid", required=True, help='braid word "b;g1,g2,..."')
        p.add_argument("--cutoff", type=int, default=6, help="max T (x-degree/2)")
        p.add_argument(
            "--format", choices=("json", "csv", "text"), default="json"
        )
        p.add_argument("--cache-dir", default=None)
        p.add_argument("--no-cache", action="store_true")
        p.add_argument("--max-dim", type=int, default=2_000_000)
        p.add_argument("--parallel", type=int, default=1)
        p.add_argument("--emit-diagram", action="store_true")
        p.add_argument("--emit-spec", action="store_true")
        if name == "verify-homotopy":
            p.add_argument("--component", type=int, default=None)
        if name in ("skein", "euler-check"):
            p.add_argument(
                "--truncation", type=int, default=None, help="x truncation order"
            )
    return parser


def _engine_config(args) -> EngineConfig:
    cache_dir = args.cache_dir or os.environ.get("BRAIDHOM_CACHE_DIR")
    use_cache = cache_dir is not None and not args.no_cache
    if args.cutoff < 0:
        raise UsageError("cutoff must be nonnegative")
    return EngineConfig(
        max_slice_dim=args.max_dim,
        parallel=args.parallel,
        cache_dir=cache_dir,
        use_cache=use_cache,
    )


def _series_rows(series) -> list:
    return [
        {"a": a, "x": x, "coeff": c}
        for (a, x), c in sorted(series.coeffs.items())
        if c
    ]


def _run_command(args) -> tuple[dict, int]:
    word = parse_braid_word(args.braid)
    config = _engine_config(args)
    stats = closure_stats(word)
    out: dict = {
        "input": word.text(),
        "config": {
            "cutoff": args.cutoff,
            "format": args.format,
            "max_dim": args.max_dim,
            "parallel": args.parallel,
            "cache": bool(config.use_cache),
        },
        "tables": {},
        "reports": {},
    }
    code = EXIT_OK

    if args.emit_diagram:
        out["diagram"] = build_marked_diagram(word).to_json()
    if args.emit_spec:
        out["spec"] = assemble(build_marked_diagram(word)).to_json()

    if args.command == "homfly":
        norm, hat = homfly_table(word, args.cutoff, config)
        out["tables"]["homfly"] = norm.to_rows()
        out["tables"]["hat_homfly"] = hat.to_rows()
    elif args.command == "e2":
        table = e2_table(word, args.cutoff, config)
        out["tables"]["e2"] = table.to_rows()
    elif args.command == "khovanov":
        table = khovanov_table(word, args.cutoff, config)
        out["tables"]["khovanov"] = table.to_rows()
    elif args.command == "hilbert":
        norm, _ = homfly_table(word, args.cutoff, config)
        coeffs, inferred, fits = hilbert_P_B(
            norm, word.strands, expected_components=stats.components
        )
        out["reports"]["hilbert"] = {
            "P_B": [str(c) for c in coeffs],
            "degree": len(coeffs) - 1,
            "components": inferred,
            "rows": {
                f"{i},{j}": {
                    "coefficients": [str(c) for c in fit.coefficients],
                    "stable_from": fit.stable_from,
                    "verified_through": fit.verified_through,
                }
                for (i, j), fit in sorted(fits.items())
            },
        }
    elif args.command == "detect-unlink":
        cutoff = max(args.cutoff, word.strands + 4)
        norm, _ = homfly_table(word, cutoff, config)
        _, inferred, _ = hilbert_P_B(
            norm, word.strands, expected_components=stats.components
        )
        report = detect_unlink(norm, inferred, cutoff)
        out["reports"]["detect_unlink"] = report.to_json()
    elif args.command == "euler-check":
        truncation = args.truncation or 2 * args.cutoff
        _, hat = homfly_table(word, args.cutoff, config)
        lhs = euler_series(hat, truncation)
        rhs = homfly_series(word, truncation)
        residual = lhs - rhs
        out["reports"]["euler_check"] = {
            "truncation": truncation,
            "euler": _series_rows(lhs),
            "skein": _series_rows(rhs),
            "residual": _series_rows(residual),
            "match": lhs == rhs,
        }
        if lhs != rhs:
            code = EXIT_INVARIANT
    elif args.command == "skein":
        truncation = args.truncation or 2 * args.cutoff
        series = homfly_series(word, truncation)
        out["tables"]["skein"] = _series_rows(series)
    elif args.command == "jones":
        poly = jones_kauffman(word)
        out["tables"]["jones"] = [
            {"q": e, "coeff": c} for e, c in sorted(poly.items())
        ]
    elif args.command == "verify-homotopy":
        components = (
            [args.component]
            if args.component is not None
            else list(range(stats.components))
        )
        reports = []
        for comp in components:
            rep = verify_homotopy_identity(word, comp, args.cutoff, config)
            reports.append(
                {
                    "component": rep.component,
                    "ok": rep.ok,
                    "first_failure": rep.first_failure,
                    "slices_checked": rep.slices_checked,
                }
            )
            if not rep.ok:
                code = EXIT_INVARIANT
        out["reports"]["verify_homotopy"] = reports
    elif args.command == "markov-check":
        rep = markov_invariance_report(word, args.cutoff, config)
        out["reports"]["markov_check"] = {
            "ok": rep.ok,
            "failures": rep.failures,
        }
        if not rep.ok:
            code = EXIT_INVARIANT
    else:
        raise UsageError(f"missing or unknown subcommand {args.command!r}")
    return out, code


def _format_output(out: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(out, indent=2, sort_keys=True)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        for kind, rows in sorted(out.get("tables", {}).items()):
            if not rows:
                continue
            header = sorted(rows[0])
            writer.writerow(["kind"] + header)
            for row in rows:
                writer.writerow([kind] + [row[k] for k in header])
        for name, report in sorted(out.get("reports", {}).items()):
            writer.writerow([name, json.dumps(report, sort_keys=True)])
        return buf.getvalue()
    lines = [f"braid {out['input']}"]
    for kind, rows in sorted(out.get("tables", {}).items()):
        lines.append(f"[{kind}]")
        for row in rows:
            lines.append("  " + "  ".join(f"{k}={row[k]}" for k in sorted(row)))
    for name, report in sorted(out.get("reports", {}).items()):
        lines.append(f"[{name}] {json.dumps(report, sort_keys=True)}")
    return "\n".join(lines) + "\n"


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        out, code = _run_command(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InvariantViolationError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    sys.stdout.write(_format_output(out, args.format))
    if not out["tables"] and not out["reports"]:
        sys.stdout.write("\n")
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
