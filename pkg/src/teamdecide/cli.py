"""Command-line entry point: simulate, fit, evaluate, selftest.

Exit codes: 0 ok, 1 selftest failure, 2 usage or config error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .core import DomainError, RewardScheme, dumps_session, loads_session, validate_session
from .fit_eval import (
    DT1,
    DT2,
    PT_KINDS,
    TASKS,
    TEST,
    FitConfig,
    cumulative_loss_csv,
    evaluate,
    fit_pt,
    fit_w,
    split_teams,
    summarize,
)
from .fixtures import run_all
from .loss import LOSS_KINDS
from .models import CENT, DT1_MODELS, DT2_MODELS, PT_CENT
from .prospect import PTParams
from .sim import SimConfig, generate, manifest

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir: Path, args, argv, inputs, outputs, started, seed=None, extra=None):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    cfg_json = json.dumps(cfg, sort_keys=True, default=str)
    doc = {
        "command": ["teamdecide"] + list(argv),
        "config_hash": hashlib.sha256(cfg_json.encode()).hexdigest(),
        "seed": seed,
        "tool_version": __version__,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "started": started,
        "finished": _now(),
    }
    if extra:
        doc.update(extra)
    atomic_write(out_dir / "manifest.json", json.dumps(doc, indent=2) + "\n")


def _scheme(text):
    try:
        return RewardScheme.parse(text)
    except (DomainError, ValueError) as e:
        raise UsageError(f"bad --scheme {text!r}: {e}")


def load_logs(logs_dir):
    d = Path(logs_dir)
    if not d.is_dir():
        raise UsageError(f"logs directory {d} does not exist")
    files = sorted(p for p in d.glob("*.json") if p.name != "manifest.json")
    logs = []
    for p in files:
        try:
            log = loads_session(p.read_text())
        except (KeyError, TypeError, ValueError) as e:
            raise UsageError(f"{p.name}: not a session log ({e})")
        problems = validate_session(log)
        if problems:
            raise UsageError(f"{p.name}: {problems[0]}")
        logs.append(log)
    if not logs:
        raise UsageError(f"no session logs found in {d}")
    return logs, files


# -- commands ---------------------------------------------------------------

def cmd_simulate(args, argv):
    started = _now()
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file {path} not found")
    try:
        raw = json.loads(path.read_text())
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.scheme is not None:
            raw["scheme"] = args.scheme
        cfg = SimConfig.from_dict(raw)
    except (json.JSONDecodeError, DomainError, TypeError, ValueError) as e:
        raise UsageError(f"bad config {path}: {e}")
    out = Path(args.out)
    logs = generate(cfg, n_jobs=args.jobs)
    written = []
    for log in logs:
        p = out / f"{log.team_id}.json"
        atomic_write(p, dumps_session(log) + "\n")
        written.append(p)
    write_manifest(out, args, argv, [path], written, started, cfg.seed,
                   {"simulation": json.loads(manifest(cfg))})
    print(f"wrote {len(written)} session logs to {out}")
    return EXIT_OK


def cmd_fit(args, argv):
    started = _now()
    scheme = _scheme(args.scheme)
    valid = DT1_MODELS if args.task == DT1 else DT2_MODELS
    if args.model not in valid:
        raise UsageError(f"unknown model {args.model!r} for {args.task}; valid: {', '.join(valid)}")
    logs, files = load_logs(args.logs)
    out = Path(args.out)
    if args.task == DT1:
        if args.model not in PT_KINDS:
            raise UsageError(f"{args.model} has no parameters to fit on {DT1}; "
                             f"fit one of {', '.join(PT_KINDS)}")
        too_short = [lg.team_id for lg in logs if len(lg.questions) <= args.train_questions]
        if too_short:
            raise UsageError(f"teams with no test questions after training: {too_short[:3]}")
        cfg = FitConfig(train_questions=args.train_questions, seed=args.seed)
        try:
            fitted = fit_pt(logs, args.model, args.loss, cfg, scheme, n_jobs=args.jobs)
        except DomainError as e:
            raise UsageError(str(e))
        doc = {"model": args.model, "loss": args.loss, "task": DT1,
               "train_questions": args.train_questions,
               "params": {t: p.to_dict() for t, p in fitted.items()}}
    else:
        if args.model not in (CENT, PT_CENT):
            raise UsageError(f"only {CENT} has a task-2 parameter (w) to fit")
        train, _ = split_teams(logs, min(args.w_train_teams, len(logs)), args.seed)
        try:
            w = fit_w(train, CENT, args.loss, scheme=scheme)
        except DomainError as e:
            raise UsageError(str(e))
        doc = {"model": args.model, "loss": args.loss, "task": DT2, "w": w,
               "train_teams": [lg.team_id for lg in train]}
    atomic_write(out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    write_manifest(out.parent, args, argv, files, [out], started, args.seed)
    print(f"wrote {out}")
    return EXIT_OK


def _read_params(paths):
    by_model, w = {}, None
    for p in paths or []:
        p = Path(p)
        if not p.is_file():
            raise UsageError(f"params file {p} not found")
        try:
            doc = json.loads(p.read_text())
            if "w" in doc:
                w = float(doc["w"])
            if "params" in doc:
                by_model[doc["model"]] = {t: PTParams.from_dict(v) for t, v in doc["params"].items()}
        except (json.JSONDecodeError, KeyError, TypeError, DomainError) as e:
            raise UsageError(f"bad params file {p}: {e}")
    return by_model, w


def cmd_evaluate(args, argv):
    started = _now()
    scheme = _scheme(args.scheme)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    valid = DT1_MODELS if args.task == DT1 else DT2_MODELS
    bad = [m for m in models if m not in valid]
    if not models or bad:
        raise UsageError(f"unknown model(s) {bad} for {args.task}; valid: {', '.join(valid)}")
    logs, files = load_logs(args.logs)
    by_model, w = _read_params(args.params)
    if args.w is not None:
        w = args.w
    reports = []
    for m in models:
        prm = None
        if args.task == DT1 and m in PT_KINDS:
            if m not in by_model:
                raise UsageError(f"{m} needs a params file from 'teamdecide fit'")
            prm = by_model[m]
        if args.task == DT2 and m in (CENT, PT_CENT) and w is None:
            raise UsageError(f"{m} on {DT2} needs --w or a params file with w")
        try:
            reports.append(evaluate(logs, m, args.loss, args.task, params=prm, w=w,
                                    split=args.split, train_questions=args.train_questions,
                                    scheme=scheme))
        except DomainError as e:
            raise UsageError(str(e))
    summary = summarize(reports)
    out = Path(args.out)
    per_team = "".join(r.to_csv().split("\r\n", 1)[1] if k else r.to_csv()
                       for k, r in enumerate(reports))
    outputs = {
        "per_team.csv": per_team,
        "summary.csv": summary.table_csv(),
        "summary.json": summary.to_json() + "\n",
        "pvalues.csv": summary.pvalues_csv(),
        "cumulative.csv": cumulative_loss_csv(reports),
        "reports.json": json.dumps([r.to_dict() for r in reports], indent=2) + "\n",
    }
    for name, text in outputs.items():
        atomic_write(out / name, text)
    write_manifest(out, args, argv, files + [Path(p) for p in args.params or []],
                   [out / n for n in outputs], started, None)
    for m, mean, std, n in summary.rows:
        print(f"{m:8s} {mean:.4f} ± {std:.4f}  (teams={n})")
    return EXIT_OK


def cmd_selftest(args, argv):
    t0 = time.perf_counter()
    scheme = _scheme(args.scheme)
    failed = False
    for name, problems in run_all(scheme, oracles=not args.quick):
        if problems:
            failed = True
            print(f"FAIL {name}")
            for msg in problems:
                print(f"  {msg}")
        else:
            print(f"PASS {name}")
    print(f"selftest finished in {time.perf_counter() - t0:.2f}s")
    return EXIT_FAIL if failed else EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scheme", default="4,1,1", help="rewards c1,c2,c3 (default 4,1,1)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker threads")

    p = argparse.ArgumentParser(prog="teamdecide", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate synthetic session logs")
    s.add_argument("--config", required=True, help="JSON simulation config")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, default=None, help="override the config seed")
    s.add_argument("--scheme", default=None, help="override the config reward scheme")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    for name, func in (("fit", cmd_fit), ("evaluate", cmd_evaluate)):
        c = sub.add_parser(name, parents=[common])
        c.add_argument("--logs", required=True, help="directory of session JSON files")
        c.add_argument("--loss", choices=LOSS_KINDS, default="l1")
        c.add_argument("--task", choices=TASKS, default=DT1)
        c.add_argument("--train-questions", type=int, default=30)
        c.add_argument("--out", required=True)
        c.set_defaults(func=func)
        if name == "fit":
            c.add_argument("--model", required=True)
            c.add_argument("--w-train-teams", type=int, default=20)
        else:
            c.add_argument("--models", required=True, help="comma-separated model names")
            c.add_argument("--params", action="append", help="params JSON from fit (repeatable)")
            c.add_argument("--w", type=float, default=None, help="agent-trust weight for CENT on dt2")
            c.add_argument("--split", choices=("train", "test", "all"), default=TEST)

    t = sub.add_parser("selftest", help="check reference scenarios and oracles")
    t.add_argument("--scheme", default="4,1,1")
    t.add_argument("--quick", action="store_true", help="skip the oracle spot checks")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
