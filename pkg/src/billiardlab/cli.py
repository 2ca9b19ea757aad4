"""Command line entry point: ``billiardlab run|validate|render|list-scenarios``."""

import argparse
import logging
import sys

from . import runner
from .config import ConfigError, load_scenario
from .render import UnsupportedArtifact, render_file

EXIT_OK = 0
EXIT_EXPECTATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _summary(doc):
    lines = []
    for exp_id, res in doc["experiments"].items():
        for c in res["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            lines.append(f"  {status} {exp_id}: {c['metric']} {c['op']} {c['value']!r}"
                         f" (got {c['got']!r})")
    return lines


def _run_one(path, out):
    scenario = load_scenario(path)
    root = runner.output_root(out, scenario)
    doc, manifest = runner.write_scenario(scenario, root)
    return scenario.name, doc, manifest, root


def cmd_run(args):
    if args.all_acceptance == bool(args.config):
        print("error: give a scenario config or --all-acceptance (not both)", file=sys.stderr)
        return EXIT_CONFIG
    paths = ([p for _, p in runner.acceptance_scenarios()] if args.all_acceptance
             else [runner.find_scenario(args.config)])
    manifests, failed = [], []
    root = None
    for path in paths:
        name, doc, manifest, root = _run_one(path, args.out)
        manifests.append(manifest)
        status = "PASS" if doc["passed"] else "FAIL"
        print(f"{status} {name}")
        for line in _summary(doc):
            print(line)
        if not doc["passed"]:
            failed.append(name)
    if args.all_acceptance:
        path = runner.write_batch_manifest(root or runner.output_root(args.out), manifests)
        print(f"manifest: {path}")
    if failed:
        print(f"{len(failed)} scenario(s) with failed expectations: {', '.join(failed)}")
        return EXIT_EXPECTATION
    return EXIT_OK


def cmd_validate(args):
    scenario = load_scenario(runner.find_scenario(args.config))
    kinds = ", ".join(e.kind for e in scenario.experiments)
    print(f"ok: {scenario.name} ({len(scenario.experiments)} experiment(s): {kinds})")
    return EXIT_OK


def cmd_render(args):
    try:
        target = render_file(args.artifact, args.output)
    except UnsupportedArtifact as exc:
        print(f"error: unsupported artifact: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {args.artifact}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    print(target)
    return EXIT_OK


def cmd_list(args):
    for name, path in runner.bundled_scenarios():
        try:
            desc = load_scenario(path).description.strip().splitlines()[0]
        except (ConfigError, IndexError):
            desc = ""
        print(f"{name:24s} {desc}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="billiardlab",
                                description="Billiard-type map experiments from scenario files.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file or bundled scenario name")
    r.add_argument("config", nargs="?")
    r.add_argument("--all-acceptance", action="store_true",
                   help="run every bundled acceptance scenario")
    r.add_argument("--out", help=f"output directory (default ${runner.OUTPUT_ENV} "
                                 f"or ./{runner.DEFAULT_OUTPUT})")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a scenario file without running it")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    d = sub.add_parser("render", help="draw a .figure.json or orbit .jsonl artifact as SVG")
    d.add_argument("artifact")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_render)

    ls = sub.add_parser("list-scenarios", help="list the bundled scenarios")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except runner.NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
