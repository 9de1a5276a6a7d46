"""Command-line entry point for the whole pipeline.

Subcommands: gen-data, train-rnn, eval-rnn, train-policy, run, plot, serve.
Every command prints a config header (flags + seed) so outputs are
reproducible from the printed line. Usage errors exit 2; integrity or
dimension failures exit 1 with a structured message.
"""

import argparse
import csv
import json
import sys

import numpy as np

from . import dataset as ds
from . import runtime, sim
from .errors import TaskmeshError
from .rnn import (ModelDims, TrainConfig, evaluate, load_checkpoint, new_model,
                  save_checkpoint)
from .rnn import train as rnn_train
from .rnn.oracles import (exhaustive_equivalence, rejection_failures,
                          sampled_equivalence)
from .policy import MappoConfig, load_policy, mappo_train, save_policy
from .sim.layouts import Layout
from .taskgen import (HttpLlmClient, MockLlmClient, default_task_suite,
                      embed_sentence, harmonize_alphabet, sampled_task_suite)

_FAMILY_CHOICES = ("search-targets", "multi-room", "retrieve-flag",
                   "flag-sequence", "defend-position")


def _header(args):
    shown = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(f"# taskmesh {args.command}: " + json.dumps(shown, default=str))


def _load_config_defaults(parser, argv):
    """--config FILE merges JSON values as argument defaults."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config) as fh:
        values = json.load(fh)
    parser.set_defaults(**values)
    subparsers = next(a for a in parser._actions
                      if isinstance(a, argparse._SubParsersAction))
    for sub in subparsers.choices.values():
        known_dests = {a.dest for a in sub._actions}
        sub.set_defaults(**{k: v for k, v in values.items()
                            if k in known_dests})


def _client(args):
    if getattr(args, "llm_endpoint", None):
        return HttpLlmClient(args.llm_endpoint)
    return MockLlmClient()


def _task_by_family(data, family):
    for task in data.manifest.tasks:
        if task.scenario and task.scenario.task_family == family:
            return task
    raise TaskmeshError(f"dataset has no task of family {family!r}")


def _write_curve(rows, path):
    if not rows:
        return
    keys = sorted({k for row in rows for k in row if not isinstance(row[k], dict)})
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


def cmd_gen_data(args):
    _header(args)
    client = _client(args)
    if args.tasks == "default":
        tasks = default_task_suite(args.seed, client=client)
    else:
        families = [f.strip() for f in args.tasks.split(",") if f.strip()]
        for fam in families:
            if fam not in _FAMILY_CHOICES:
                raise TaskmeshError(f"unknown task family {fam!r}")
        tasks = sampled_task_suite(families, args.per_family, args.seed,
                                   client=client)
    data = ds.build_dataset(tasks, L=args.L, K=args.K, seed=args.seed)
    ds.serialize(data, args.out)
    counts = {}
    for sample in data.samples:
        counts[sample.task_id] = counts.get(sample.task_id, 0) + 1
    for tid in sorted(counts):
        family = data.manifest.tasks[tid].scenario.task_family
        print(f"task {tid} ({family}): {counts[tid]} traces")
    print(f"wrote {len(data)} samples to {args.out}")


def cmd_train_rnn(args):
    _header(args)
    data = ds.deserialize(args.data)
    train_split, test_split = ds.split(data, args.train_fraction, seed=args.seed)
    dims = ModelDims(n_events=data.manifest.N, emb_dim=data.manifest.D,
                     hidden_dim=args.hdim, label_count=len(data.label_names))
    model = new_model(dims, data.alphabet, data.label_names, seed=args.seed)
    trained, curve = rnn_train(model, train_split, TrainConfig(
        lr=args.lr, epochs=args.epochs, seed=args.seed))
    save_checkpoint(trained, args.out)
    if args.curve:
        _write_curve(curve, args.curve)
    result = evaluate(trained, test_split)
    print(f"epochs run: {len(curve)}  final loss: {curve[-1]['loss']:.6f}")
    print(f"test step accuracy: {result['step_accuracy']:.4f}  "
          f"sequence accuracy: {result['sequence_accuracy']:.4f}")
    print(f"checkpoint: {args.out}")


def cmd_eval_rnn(args):
    _header(args)
    model = load_checkpoint(args.model)
    data = ds.deserialize(args.data)
    _, test_split = ds.split(data, 0.8, seed=data.manifest.split_seed or 0)
    result = evaluate(model, test_split)
    print(f"{'task':>4}  {'family':<16} {'step acc':>9}")
    for tid, acc in sorted(result["per_task"].items()):
        family = data.manifest.tasks[tid].scenario.task_family
        print(f"{tid:>4}  {family:<16} {acc:>9.4f}")
    print(f"overall step accuracy {result['step_accuracy']:.4f}, "
          f"sequence accuracy {result['sequence_accuracy']:.4f}")
    total_mismatches = 0
    for tid, task in enumerate(data.manifest.tasks):
        emb = embed_sentence(task.command_text).values
        ex = exhaustive_equivalence(model, task, tid, args.exhaustive_depth, emb)
        rej = rejection_failures(model, task, tid, emb)
        total_mismatches += ex["mismatches"] + len(rej)
        print(f"task {tid}: exhaustive depth {args.exhaustive_depth}: "
              f"{ex['mismatches']}/{ex['sequences']} mismatches; "
              f"rejection failures: {len(rej)}")
        if args.sampled:
            sa = sampled_equivalence(model, task, tid, args.sampled, 50, emb,
                                     seed=args.seed)
            total_mismatches += sa["mismatches"]
            print(f"task {tid}: sampled {sa['sequences']}x50: "
                  f"{sa['mismatches']} mismatches")
    verdict = "EQUIVALENT" if total_mismatches == 0 else "MISMATCH"
    print(f"oracle verdict: {verdict}")
    if total_mismatches:
        sys.exit(1)


def cmd_train_policy(args):
    _header(args)
    model = load_checkpoint(args.rnn)
    data = ds.deserialize(args.data)
    task = _task_by_family(data, args.scenario)
    config = MappoConfig(frames_budget=args.frames, seed=args.seed,
                         n_robots=args.n, baseline=args.baseline)
    policy, curve = mappo_train(model, [task], config)
    save_policy(policy, args.out)
    if args.curve:
        _write_curve(curve, args.curve)
    tail = curve[-1] if curve else {}
    print(f"updates: {len(curve)}  frames: {tail.get('frames', 0)}  "
          f"success rate (recent): {tail.get('success_rate', 0.0):.2f}")
    print(f"checkpoint: {args.out}")


def _parse_disruptions(specs):
    out = []
    for spec in specs or []:
        when, _, what = spec.partition(":")
        if what.startswith("move:"):
            _, robot, pos = what.split(":", 2)
            x, y = pos.split(",")
            out.append((int(when), {"robot": int(robot),
                                    "pos": (float(x), float(y))}))
        else:
            out.append((int(when), what))
    return out


def _parse_init_subtasks(specs):
    out = {}
    for spec in specs or []:
        robot, _, text = spec.partition("=")
        out[int(robot)] = text
    return out


def cmd_run(args):
    _header(args)
    model = load_checkpoint(args.rnn)
    policy = load_policy(args.policy)
    data = ds.deserialize(args.data)
    task = _task_by_family(data, args.scenario)
    log = runtime.run_episode(
        task, model, policy, n_robots=args.n, command_text=args.command,
        init_mode=args.init_mode,
        init_subtasks=_parse_init_subtasks(args.init_subtask),
        disruptions=_parse_disruptions(args.disrupt),
        seed=args.seed, tick_cap=args.tick_cap)
    runtime.save_log(log, args.log)
    from .sim.metrics import episode_metrics
    summary = episode_metrics(log)
    print(f"ticks: {len(log.records)}  completed: {summary['completed']}"
          f"  completion tick: {summary['completion_tick']}"
          f"  rooms found: {summary['rooms_found']}")
    print(f"log: {args.log}")


def cmd_plot(args):
    _header(args)
    from . import plotting
    if args.kind == "curve":
        with open(args.log) as fh:
            rows = list(csv.DictReader(fh))
        y_keys = [k for k in rows[0].keys()
                  if k not in ("epoch", "update", "frames")]
        x_key = "epoch" if "epoch" in rows[0] else "frames"
        plotting.plot_curve(rows, args.out, x_key, y_keys)
    else:
        header, rows = runtime.load_log_rows(args.log)
        layout = Layout.from_json(json.dumps(header["layout"])) \
            if header.get("layout") else None
        if args.kind == "trajectory":
            plotting.plot_trajectories(header, rows, args.out, layout)
        else:
            distances = [[row["target_distances"][r] for row in rows]
                         for r in range(header["n_robots"])]
            plotting.plot_distances(header, rows, args.out, distances)
    print(f"figure: {args.out}")


def cmd_serve(args):
    _header(args)
    from .server import build_app
    import uvicorn
    model = load_checkpoint(args.rnn)
    policy = load_policy(args.policy)
    data = ds.deserialize(args.data)
    app = build_app(model, policy, list(data.manifest.tasks),
                    static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def build_parser():
    parser = argparse.ArgumentParser(prog="taskmesh")
    parser.add_argument("--config", help="JSON file overriding flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate tasks and the walk dataset")
    p.add_argument("--tasks", default="default",
                   help="'default' or comma list of families")
    p.add_argument("--per-family", type=int, default=1)
    p.add_argument("--L", type=int, default=500)
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mock-llm", action="store_true", default=True)
    p.add_argument("--llm-endpoint", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-rnn", help="distill the task machines")
    p.add_argument("--data", required=True)
    p.add_argument("--hdim", type=int, default=64)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--curve", default=None, help="write loss curve CSV here")
    p.set_defaults(func=cmd_train_rnn)

    p = sub.add_parser("eval-rnn", help="accuracy plus oracle equivalence")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--exhaustive-depth", type=int, default=6)
    p.add_argument("--sampled", type=int, default=0,
                   help="also check this many random length-50 sequences")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval_rnn)

    p = sub.add_parser("train-policy", help="MAPPO over sub-task segments")
    p.add_argument("--rnn", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--scenario", required=True, choices=_FAMILY_CHOICES)
    p.add_argument("--frames", type=int, default=300_000)
    p.add_argument("--baseline", default="none",
                   choices=("none", "vanilla", "reward_tuned"))
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--curve", default=None)
    p.set_defaults(func=cmd_train_policy)

    p = sub.add_parser("run", help="run one decentralized episode")
    p.add_argument("--rnn", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--scenario", required=True, choices=_FAMILY_CHOICES)
    p.add_argument("--command", default=None)
    p.add_argument("--init-mode", default="random")
    p.add_argument("--init-subtask", action="append",
                   help="robot=text, repeatable")
    p.add_argument("--disrupt", action="append",
                   help="tick:EVENT or tick:move:robot:x,y, repeatable")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tick-cap", type=int, default=400)
    p.add_argument("--log", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="figures from logs and curves")
    p.add_argument("--log", required=True)
    p.add_argument("--kind", required=True,
                   choices=("trajectory", "distance", "curve"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("serve", help="operator console backend")
    p.add_argument("--rnn", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--static-dir", default=None)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    _load_config_defaults(parser, argv)
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except TaskmeshError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        sys.exit(1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
