"""Command-line front end: ``clustermt run|report|select|plot``.

Exit codes: 0 success, 2 configuration or input error, 3 when every
candidate is eliminated during selection.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import relations as R
from .clusterers.base import SYSTEMS, ClusterParams, system_kind
from .data import BlobConfig
from .exceptions import ClusterMTError, EmptyCandidateError
from .harness import CampaignSummary, INIT_MODES, run_campaign, trials_csv
from .plotting import scatter_pair_svg
from .selection import SelectionScheme, select_from_summary

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EMPTY = 3


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    systems: tuple
    mrs: tuple
    n_trials: int
    master_seed: int
    blob_template: BlobConfig
    params: ClusterParams
    output: Path
    jobs: int = 1
    keep_data: bool = False
    init_mode: str = "seeded"


def _split(text, parse, what):
    items = [t for t in (s.strip() for s in text.split(",")) if t]
    if not items:
        raise InputError(f"no {what} given")
    out = []
    for t in items:
        try:
            v = parse(t)
        except ClusterMTError as exc:
            raise InputError(str(exc)) from None
        if v not in out:
            out.append(v)
    return tuple(out)


def _config_from_args(args) -> RunConfig:
    systems = _split(args.systems, system_kind, "systems")
    mrs = _split(args.mrs, R.mr_id, "relations")
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    if args.jobs < 1:
        raise InputError("--jobs must be >= 1")
    for mr in mrs:
        if not any(R.is_applicable(mr, s) for s in systems):
            raise InputError("; ".join(f"{mr} not applicable to {s}" for s in systems))
    try:
        params = ClusterParams(k=args.k, linkage=args.linkage, eps=args.eps, min_pts=args.min_pts,
                               normalize=args.normalize)
        blobs = BlobConfig(centers=args.centers, cluster_std=args.cluster_std)
        blobs.validate()
    except (ClusterMTError, ValueError) as exc:
        raise InputError(str(exc)) from None
    return RunConfig(systems, mrs, args.trials, args.seed, blobs, params, Path(args.output), args.jobs,
                     args.keep_data, args.init)


def _prepare_output(path: Path):
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise InputError(f"output directory {path} is not writable: {exc}") from None


def _snapshot(run, directory: Path):
    R.write_case(run.case, directory, run.source_outcome.assignments, run.followup_outcome.assignments)
    rec = run.record
    meta = {"trial_id": rec.trial_id, "system": rec.system, "mr": rec.mr, "seed": rec.seed,
            "rp": rec.rp, "pattern": rec.pattern}
    (directory / "trial.json").write_text(json.dumps(meta, indent=2) + "\n")


def cmd_run(config: RunConfig) -> int:
    _prepare_output(config.output)
    results, summary = run_campaign(
        config.systems, config.mrs, config.n_trials, config.master_seed, config.blob_template, config.params,
        jobs=config.jobs, keep_runs=config.keep_data, init_mode=config.init_mode,
    )
    records = [r.record for r in results] if config.keep_data else results
    (config.output / "trials.csv").write_text(trials_csv(records))
    (config.output / "summary.json").write_text(summary.to_json())
    if config.keep_data:
        for run in results:
            _snapshot(run, config.output / "data" / run.record.trial_id)
    skipped = [f"{s}/{m}" for s in config.systems for m in config.mrs if not R.is_applicable(m, s)]
    print(f"{len(records)} trials written to {config.output}")
    if skipped:
        print("skipped (N/A): " + ", ".join(skipped))
    return EXIT_OK


def _load_summary(path) -> CampaignSummary:
    try:
        return CampaignSummary.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, StopIteration, ClusterMTError) as exc:
        raise InputError(f"malformed summary {path}: {exc}") from None


def _pct(x):
    if x is None:
        return "0"
    v = round(100 * x, 1)
    if v == 0:
        return "0"
    return f"{v:g}%"


def format_matrix(summary: CampaignSummary, value) -> str:
    """Rows are MRs, columns systems; inapplicable cells read N/A."""
    header = ["MR"] + summary.systems
    rows = [header]
    for m in summary.mrs:
        row = [m]
        for s in summary.systems:
            cell = summary.cell(s, m)
            row.append("N/A" if not cell.applicable else _pct(value(cell)))
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths)))
                     for r in rows)


def cmd_report(summary_path) -> int:
    summary = _load_summary(summary_path)
    print("Violation rate (VR)")
    print(format_matrix(summary, lambda c: c.vr))
    print()
    print("Mean RP over violated trials")
    print(format_matrix(summary, lambda c: c.mean_rp))
    return EXIT_OK


def cmd_select(summary_path, scheme_path, output=None) -> int:
    summary = _load_summary(summary_path)
    try:
        scheme = SelectionScheme.load(scheme_path)
    except ClusterMTError as exc:
        raise InputError(str(exc)) from None
    try:
        result = select_from_summary(summary, scheme)
    except EmptyCandidateError as exc:
        print(f"no candidate left: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except ClusterMTError as exc:
        raise InputError(str(exc)) from None
    if result.eliminated:
        print("eliminated:")
        for s, mrs in result.eliminated.items():
            print(f"  {s}: violates must-have {', '.join(mrs)}")
    print("scores:")
    for s in result.ranking:
        print(f"  {s}  {result.scores[s]:.4f}")
    note = f" (tie with {', '.join(result.tied_with)}, broken by name)" if result.tied_with else ""
    print(f"chosen: {result.chosen}{note}")
    out = Path(output) if output else Path(summary_path).parent
    out.mkdir(parents=True, exist_ok=True)
    (out / "selection.json").write_text(result.to_json())
    return EXIT_OK


def cmd_plot(trials_path, trial_id, output=None) -> int:
    root = Path(trials_path)
    root = root.parent if root.suffix == ".csv" else root
    data = root / "data" / trial_id
    if not (data / "manifest.json").exists():
        raise InputError(f"trial {trial_id} not found under {root / 'data'} (was the run made with --keep-data?)")
    try:
        case, src_labels, fu_labels = R.read_case(data)
    except (OSError, ValueError, KeyError, ClusterMTError) as exc:
        raise InputError(f"cannot read trial {trial_id}: {exc}") from None
    if case.source.dim != 2 or case.followup.dim != 2:
        raise InputError(f"trial {trial_id} is not 2-D; nothing to plot")
    if src_labels is None or fu_labels is None:
        raise InputError(f"trial {trial_id} has no stored labels")
    pos = case.followup.position_of()
    added = [pos[i] for i in case.added_ids]
    svg = scatter_pair_svg(case.source.coords, src_labels, case.followup.coords, fu_labels,
                           title=trial_id, added_rows=added)
    plots = Path(output) if output else root / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    target = plots / f"trial_{trial_id}.svg"
    target.write_text(svg)
    print(target)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clustermt", description="Metamorphic testing of clustering systems.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a trial campaign")
    r.add_argument("--systems", default=",".join(SYSTEMS).lower())
    r.add_argument("--mrs", default=",".join(R.MR_IDS).lower())
    r.add_argument("--trials", type=int, default=100)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True)
    r.add_argument("--eps", type=float, default=0.1)
    r.add_argument("--min-pts", type=int, default=8)
    r.add_argument("--linkage", default="average")
    r.add_argument("--k", type=int, default=None, help="cluster count for KM, AN, FF (default 3)")
    r.add_argument("--centers", type=int, default=3, help="blob clusters per dataset")
    r.add_argument("--cluster-std", type=float, default=0.5)
    r.add_argument("--init", choices=INIT_MODES, default="seeded",
                   help="'explicit' starts KM/XM/FF from identical point ids in both runs")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--keep-data", action="store_true", help="store per-trial datasets and labels")
    r.add_argument("-o", "--output", default="out")

    rep = sub.add_parser("report", help="print VR and mean-RP matrices")
    rep.add_argument("summary")

    s = sub.add_parser("select", help="score and rank systems under a selection scheme")
    s.add_argument("summary")
    s.add_argument("scheme")
    s.add_argument("-o", "--output", default=None)

    pl = sub.add_parser("plot", help="render one stored trial as a two-panel SVG")
    pl.add_argument("trials", help="trials.csv (or its directory) of a run made with --keep-data")
    pl.add_argument("trial_id", help="e.g. km_mr2.1_007")
    pl.add_argument("-o", "--output", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_config_from_args(args))
        if args.command == "report":
            return cmd_report(args.summary)
        if args.command == "select":
            return cmd_select(args.summary, args.scheme, args.output)
        return cmd_plot(args.trials, args.trial_id, args.output)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
