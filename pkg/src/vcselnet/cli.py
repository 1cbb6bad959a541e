"""Command-line entry point: ``vcselnet {snapshot,sweep,convergence,cdf,verify}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__, bia, harness, optics
from .config import PRESETS, ScenarioConfig, get_preset


class CliError(Exception):
    pass


class CheckFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


def _common(p, schemes):
    p.add_argument("--config", type=Path, help="JSON scenario file (may name a base preset)")
    p.add_argument("--preset", choices=sorted(PRESETS), default="paper-table1")
    p.add_argument("--seed", type=int, help="base seed; snapshot i uses seed + i")
    p.add_argument("--snapshots", type=int, default=1)
    p.add_argument("--schemes", type=_csv_list(str), default=list(schemes))
    p.add_argument("--users", type=_csv_list(int), help="K values, comma separated")
    p.add_argument("--waists", type=_csv_list(float), help="beam waists in micrometres")
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1, help="0 = one per CPU")


def build_parser():
    ap = _Parser(prog="vcselnet", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("snapshot", help="all schemes on one user drop")
    _common(p, harness.SCHEMES)
    p.add_argument("--dump-channels", action="store_true", help="write one gain CSV per user")
    p.add_argument("--dump-supersymbol", action="store_true",
                   help="write the BIA schedule for (L, K_f) when it is small enough")

    p = sub.add_parser("sweep", help="mean/median sum rate over K x W_0")
    _common(p, ["BIA-decentralized"])
    p = sub.add_parser("convergence", help="utility per solver iteration")
    _common(p, ["BIA-decentralized", "BIA-centralized"])
    p = sub.add_parser("cdf", help="empirical CDF of the sum rate")
    _common(p, ["BIA-decentralized", "ZF"])

    p = sub.add_parser("verify", help="built-in self-checks")
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    return ap


def load_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config) if args.config else get_preset(args.preset)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def make_spec(args) -> harness.ExperimentSpec:
    cfg = load_config(args)
    return harness.ExperimentSpec(
        config=cfg,
        num_users=tuple(args.users or (cfg.num_users,)),
        beam_waists=tuple(w / 1e6 for w in args.waists) if args.waists else (cfg.beam_waist,),
        schemes=tuple(args.schemes),
        snapshots=args.snapshots,
        base_seed=cfg.seed,
        workers=args.workers,
    )


TABLE_FOR = {"sweep": ("sweep",), "convergence": ("convergence",), "cdf": ("cdf",)}


def cmd_report(args):
    spec = make_spec(args)
    report = harness.sweep(spec)
    paths = harness.export(report, spec, args.out, args.format, TABLE_FOR[args.command])
    return {"written": [str(p) for p in paths], "failed_entries": len(report.errors())}


def cmd_snapshot(args):
    spec = make_spec(args)
    if args.snapshots != 1:
        raise CliError("snapshot runs exactly one drop; use sweep or cdf for more")
    K, w = spec.num_users[0], spec.beam_waists[0]
    entries = harness.run_snapshot(spec, spec.base_seed, K, w)
    report = harness.RunReport(entries)
    out = Path(args.out)
    paths = harness.export(report, spec, out, args.format, ("convergence",))

    cfg = spec.config.replace(num_users=K, beam_waist=w)
    sc, H, link = harness.prepare(cfg, spec.base_seed)
    summary = [
        dict(scheme=e.scheme, sum_rate=e.sum_rate, utility=e.utility, error=e.error or "")
        for e in entries
    ]
    path = out / f"snapshot.{args.format}"
    if args.format == "csv":
        with open(path, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=list(summary[0]))
            wr.writeheader()
            wr.writerows(summary)
    else:
        doc = {
            "metadata": harness.metadata(spec),
            "classes": {
                "full": (link.full + 1).tolist(),
                "partial": (link.partial + 1).tolist(),
                "outage": (link.outage + 1).tolist(),
            },
            "schemes": summary,
            "user_rates": {e.scheme: e.user_rates for e in entries},
        }
        path.write_text(json.dumps(doc, indent=2))
    paths.append(path)

    if args.dump_channels:
        cdir = out / "channels"
        cdir.mkdir(parents=True, exist_ok=True)
        for k in range(H.shape[0]):
            p = cdir / f"user_{k + 1}.csv"
            optics.dump_channel_csv(H[k], p)
            paths.append(p)
    result = {"written": [str(p) for p in paths]}
    if args.dump_supersymbol:
        L, Kf = sc.num_vcsels, max(len(link.full), 1)
        try:
            ss = bia.build_supersymbol(L, Kf)
        except bia.SupersymbolTooLarge as exc:
            result["supersymbol"] = str(exc)
        else:
            p = out / "supersymbol.csv"
            ss.to_csv(p)
            result["written"].append(str(p))
    return result


def cmd_verify(args):
    from . import verify

    results = verify.run_all()
    rows = [dict(check=n, passed=bool(ok), detail=d) for n, ok, d in results]
    for r in rows:
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['check']} {r['detail']}")
    out = {"checks": rows}
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / f"verify.{args.format}"
        if args.format == "csv":
            with open(path, "w", newline="") as fh:
                wr = csv.DictWriter(fh, fieldnames=["check", "passed", "detail"])
                wr.writeheader()
                wr.writerows(rows)
        else:
            path.write_text(json.dumps(out, indent=2))
    if not all(r["passed"] for r in rows):
        raise CheckFailed("self-check failed: " + ", ".join(r["check"] for r in rows if not r["passed"]))
    return out


COMMANDS = {
    "snapshot": cmd_snapshot,
    "sweep": cmd_report,
    "convergence": cmd_report,
    "cdf": cmd_report,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        result = COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - every failure becomes a JSON error
        kind = "usage" if isinstance(exc, CliError) else type(exc).__name__
        json.dump({"status": "error", "error": kind, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2 if kind == "usage" else 1
    json.dump({"status": "ok", **result}, sys.stdout)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
