"""Command-line driver: ``hyperrec {generate,ingest,build,recommend,evaluate}``.

Every subcommand reads an optional flat config file (``--config``) and
``--set key=value`` overrides; a few common keys also have dedicated
flags.  Failures print one ``error: <Kind>: <message>`` line to stderr.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

from .config import load_config, parse_overrides
from .evalharness import SplitSpec, quantile_cutoff, run_evaluation
from .exceptions import ConfigError, HyperrecError
from .ingest import load_dataset, write_json
from .profiles import doctor_profiles, patient_profiles, trust_weights, write_profiles
from .recsys import (
    doctor_similarity,
    make_recommender,
    patient_similarity,
    write_recommendations,
)
from .synthgen import generate, write_world

logger = logging.getLogger("hyperrec")

EXIT_DOMAIN = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_matrix(path, row_labels, col_labels, values):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["id", *col_labels])
        for label, row in zip(row_labels, values):
            w.writerow([label, *(repr(float(x)) for x in row)])


def _load(cfg):
    return load_dataset(cfg.data_dir, clamp_eps=cfg.clamp_eps, reference_date=cfg.reference_date)


def cmd_generate(cfg):
    world = generate(cfg.synth_params())
    out = write_world(world, cfg.out_dir)
    print(f"wrote synthetic data set to {out}")


def cmd_ingest(cfg):
    ds = _load(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = ds.report()
    report["config"] = cfg.echo()
    write_json(out / "ingest_report.json", report)
    stats = ds.log.stats
    print(f"retained {stats['patients_retained']} of {stats['patients_in_file']} patients; "
          f"report at {out / 'ingest_report.json'}")


def cmd_build(cfg):
    ds = _load(cfg)
    pats = patient_profiles(ds.log, ds.code_map, ds.table, cfg.clamp_eps)
    docs, excluded = doctor_profiles(ds.log, ds.code_map, ds.table, cfg.clamp_eps)
    trust = trust_weights(ds.log, cfg.reference_date, cfg.tau_days)
    s_doc = doctor_similarity(docs)
    s_pat = patient_similarity(pats)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_profiles(out / "profiles.tsv", pats, docs)
    _write_matrix(out / "trust.tsv", trust.patient_ids, trust.doctor_ids, trust.values)
    _write_matrix(out / "doctor_similarity.tsv", s_doc.labels, s_doc.labels, s_doc.values)
    _write_matrix(out / "patient_similarity.tsv", s_pat.labels, s_pat.labels, s_pat.values)
    write_json(out / "build_report.json", {
        "patients": len(pats),
        "doctors_profiled": len(docs),
        "doctors_excluded": list(excluded),
        "config": cfg.echo(),
    })
    print(f"built {len(pats)} patient and {len(docs)} doctor profiles in {out}")


def cmd_recommend(cfg):
    ds = _load(cfg)
    patients = None if cfg.patient is None else [cfg.patient]
    out = Path(cfg.out_dir)
    results = []
    for model in cfg.models:
        est = make_recommender(model, table=ds.table, code_map=ds.code_map,
                               tau_days=cfg.tau_days, reference_date=cfg.reference_date,
                               clamp_eps=cfg.clamp_eps, denominator=cfg.affinity_denominator)
        est.fit(ds.log)
        for n in cfg.n:
            results.append((out / f"recs_{model}_{n}.csv", est.recommend(n, patients)))
    out.mkdir(parents=True, exist_ok=True)
    for path, lists in results:
        write_recommendations(path, lists)
        print(f"wrote {path}")


def cmd_evaluate(cfg):
    ds = _load(cfg)
    cut = cfg.cutoff_value()
    spec = quantile_cutoff(ds.log, cut) if isinstance(cut, float) else SplitSpec(cut)
    report = run_evaluation(
        ds.log, cfg.models, spec, cfg.n,
        table=ds.table, code_map=ds.code_map, tau_days=cfg.tau_days,
        reference_date=cfg.reference_date, clamp_eps=cfg.clamp_eps,
        denominator=cfg.affinity_denominator, config=cfg.echo(),
    )
    report.write(cfg.out_dir)
    for model, n, hr, p in report.rows():
        print(f"{model:16s} n={n:<3d} HR={hr:.4f} p={p:.4f}")


COMMANDS = {
    "generate": cmd_generate,
    "ingest": cmd_ingest,
    "build": cmd_build,
    "recommend": cmd_recommend,
    "evaluate": cmd_evaluate,
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("--data", help="input directory (data_dir)")
    common.add_argument("--out", help="output directory (out_dir)")

    parser = _Parser(prog="hyperrec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    gen = sub.add_parser("generate", parents=[common], help="write a synthetic data set")
    gen.add_argument("--seed", type=int)
    sub.add_parser("ingest", parents=[common], help="load data and write an ingest report")
    sub.add_parser("build", parents=[common], help="dump profiles, trust and similarity matrices")
    rec = sub.add_parser("recommend", parents=[common], help="write top-n recommendation lists")
    rec.add_argument("--patient")
    rec.add_argument("--n", type=int)
    rec.add_argument("--model")
    sub.add_parser("evaluate", parents=[common], help="temporal-split HR@n / p@n evaluation")
    return parser


def _overrides(args):
    ov = parse_overrides(args.set)
    flag_keys = {"data": "data_dir", "out": "out_dir", "seed": "seed", "patient": "patient",
                 "n": "n", "model": "models"}
    for attr, key in flag_keys.items():
        value = getattr(args, attr, None)
        if value is not None:
            ov[key] = str(value)
    return ov


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config, _overrides(args))
    except UsageError as exc:
        print(f"error: UsageError: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](cfg)
    except (HyperrecError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}",
              file=sys.stderr)
        return EXIT_DOMAIN
    return 0


if __name__ == "__main__":
    sys.exit(main())
