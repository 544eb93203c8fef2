"""Command-line front end.

Exit codes: 0 pass, 1 refutation (witness written), 2 input error,
3 inconclusive.  Every JSON report is written with sorted keys and carries
the seed; wall-clock data goes to ``metadata.json`` only, so reruns with the
same arguments give byte-identical reports.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from dataclasses import dataclass, field

from .errors import InvalidParameter
from .fieldlab import GridFunction, compare
from .jetcore import SampleBox
from .operators import certify_pair, check_RC, correspondence_check, operator_from_json, theta_from_pair
from .slag import certify_slag_continuity

EXIT_PASS, EXIT_REFUTED, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3

SUMMARY_COLUMNS = ["label", "PEP", "PB1", "PB2", "NDC", "RC", "correspondence"]


@dataclass
class RunConfig:
    command: str
    out: str
    seed: int = 0
    samples: int | None = None
    etas: list = field(default_factory=lambda: [1.0, 0.5, 0.1])
    tol: float | None = None
    threads: int | None = None
    spec: str | None = None
    grids: list = field(default_factory=list)
    dim: int | None = None
    max_halvings: int = 20

    def to_json(self) -> dict:
        return {"command": self.command, "seed": self.seed, "samples": self.samples, "etas": self.etas,
                "tol": self.tol, "spec": self.spec, "grids": self.grids, "dim": self.dim,
                "max_halvings": self.max_halvings}


def _etas(text: str) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eta list {text!r}") from exc
    if not vals or min(vals) <= 0:
        raise argparse.ArgumentTypeError("etas must be positive")
    return vals


def _write_json(path: str, data):
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True, indent=2, allow_nan=True)
        fh.write("\n")


def _write_csv(path: str, header: list, rows: list):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _metadata(cfg: RunConfig, argv):
    _write_json(os.path.join(cfg.out, "metadata.json"), {
        "argv": list(argv),
        "threads": cfg.threads or os.cpu_count(),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    })


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParameter(f"cannot read {path}: {exc}") from exc


def _box(cfg: RunConfig) -> SampleBox:
    return SampleBox(r_range=(-10.0, 10.0), eig_scale=10.0, seed=cfg.seed)


def cmd_certify_operator(cfg: RunConfig) -> int:
    # structural preconditions are checked, not enforced, so a broken
    # operator yields a refutation rather than an input error
    op = operator_from_json(_load_json(cfg.spec), validate=False)
    box = _box(cfg)
    n_points = cfg.samples or 256
    pair = certify_pair(op, box=box, n_points=n_points)
    rc = check_RC(op, cfg.etas, box=box, n_points=n_points, max_halvings=cfg.max_halvings)
    corr = correspondence_check(op, box=box, n_points=max(16, n_points // 4))
    _write_json(os.path.join(cfg.out, "pair_certificate.json"), {"seed": cfg.seed, **pair.to_json()})
    _write_json(os.path.join(cfg.out, "rc_certificate.json"), {"seed": cfg.seed, **rc.to_json()})
    _write_json(os.path.join(cfg.out, "correspondence.json"), {"seed": cfg.seed, **corr.to_json()})
    for name, rep in sorted(pair.conditions.items()):
        if not rep.passed:
            _write_json(os.path.join(cfg.out, f"witness_{name}.json"), {"seed": cfg.seed, "witness": rep.witness})
    if rc.verdict == "refuted":
        _write_json(os.path.join(cfg.out, "witness_RC.json"), {"seed": cfg.seed, "witness": rc.witness})
    if not corr.passed:
        _write_json(os.path.join(cfg.out, "witness_correspondence.json"), {"seed": cfg.seed, "witness": corr.witness})
    rc_word = {"certified": "pass", "refuted": "fail"}.get(rc.verdict, "inconclusive")
    row = [op.label, pair.verdict("PEP"), pair.verdict("PB1"), pair.verdict("PB2"), pair.verdict("NDC"),
           rc_word, "pass" if corr.passed else "fail"]
    _write_csv(os.path.join(cfg.out, "summary.csv"), SUMMARY_COLUMNS, [row])
    if not pair.passed or rc.verdict == "refuted" or not corr.passed:
        return EXIT_REFUTED
    return EXIT_PASS if rc.verdict == "certified" else EXIT_INCONCLUSIVE


def cmd_slag(cfg: RunConfig) -> int:
    if len(cfg.grids) != 1:
        raise InvalidParameter("slag needs exactly one --grid (the phase h)")
    h = GridFunction.load(cfg.grids[0])
    n = cfg.dim or h.dim
    kw = {"spot_points": cfg.samples} if cfg.samples else {}
    rep = certify_slag_continuity(h, n, cfg.etas, box=_box(cfg), **kw)
    _write_json(os.path.join(cfg.out, "phase_report.json"), {"seed": cfg.seed, **rep.to_json()})
    cert = rep.certificate
    _write_csv(os.path.join(cfg.out, "eta_delta.csv"), ["eta", "delta"],
               [[repr(e), "" if d is None else repr(d)] for e, d in zip(cert.eta_grid, cert.delta_for_eta)])
    if cert.verdict == "refuted":
        _write_json(os.path.join(cfg.out, "witness.json"), {"seed": cfg.seed, "witness": cert.witness})
        return EXIT_REFUTED
    return EXIT_PASS if cert.verdict == "certified" else EXIT_INCONCLUSIVE


def cmd_compare(cfg: RunConfig) -> int:
    if len(cfg.grids) != 2:
        raise InvalidParameter("compare needs two --grid arguments (u then v)")
    op = operator_from_json(_load_json(cfg.spec))
    u, v = (GridFunction.load(p) for p in cfg.grids)
    if u.dim != v.dim or u.shape != v.shape:
        raise InvalidParameter("u and v live on different grids")
    if u.dim != op.domain.dim or u.dim != op.dim:
        raise InvalidParameter(f"grid dimension {u.dim} does not match the operator (dim {op.dim})")
    verdict = compare(u, v, theta_from_pair(op), cfg.tol)
    _write_json(os.path.join(cfg.out, "verdict.json"), {"seed": cfg.seed, **verdict.to_json()})
    rows = [[" ".join(map(str, item["node"])), " ".join(repr(t) for t in item["x"]), repr(item.get("value"))]
            for item in verdict.violations]
    _write_csv(os.path.join(cfg.out, "violations.csv"), ["node", "x", "value"], rows)
    return EXIT_PASS if verdict.passed else EXIT_REFUTED


COMMANDS = {"certify-operator": cmd_certify_operator, "slag": cmd_slag, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ellipticmaps", description="Numerical certification of elliptic maps.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--spec", help="operator-spec JSON")
        s.add_argument("--grid", action="append", default=[], help="GridFunction JSON (repeatable)")
        s.add_argument("--out", required=True, help="output directory")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--samples", type=int, default=None)
        s.add_argument("--etas", type=_etas, default=[1.0, 0.5, 0.1])
        s.add_argument("--tol", type=float, default=None)
        s.add_argument("--threads", type=int, default=None)
        s.add_argument("--dim", type=int, default=None, help="jet dimension N (slag)")
        s.add_argument("--max-halvings", type=int, default=20)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    cfg = RunConfig(args.command, args.out, args.seed, args.samples, args.etas, args.tol, args.threads,
                    args.spec, args.grid, args.dim, args.max_halvings)
    if args.command in ("certify-operator", "compare") and not cfg.spec:
        print(f"error: {args.command} needs --spec", file=sys.stderr)
        return EXIT_INPUT
    try:
        os.makedirs(cfg.out, exist_ok=True)
        code = COMMANDS[args.command](cfg)
    except InvalidParameter as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _metadata(cfg, argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
