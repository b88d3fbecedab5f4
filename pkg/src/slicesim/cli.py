"""Command-line entry points.

Subcommands:

    simulate            heuristic or frozen-checkpoint placement
    train               agent training, optionally fanned over seeds
    evaluate            frozen checkpoint against fresh or replayed traffic
    export-events       write an arrival/departure stream to a file
    inspect-checkpoint  print a checkpoint's manifest

Results land under --out-dir (default: $SLICESIM_OUTPUT_ROOT or ./runs):
a per-arrival CSV, a per-phase CSV, a JSON run manifest, optionally
plot-ready JSON, and checkpoints for training runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .agent import Agent, AgentConfig, uses_load
from .errors import SliceSimError
from .metrics import write_phase_csv, write_plot_json, write_records_csv
from .networks import load_checkpoint
from .scenario import RunManifest, Scenario, TOOL_VERSION, load_scenario
from .simulation import AgentPolicy, HeuristicPolicy, Simulation
from .traffic import Arrival, export_events, load_events


def _out_dir(args) -> str:
    root = args.out_dir or os.environ.get("SLICESIM_OUTPUT_ROOT", "runs")
    os.makedirs(root, exist_ok=True)
    return root


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True,
                   help="scenario file path or bundled name "
                        "(reference, desk, tiny)")
    p.add_argument("--seed", type=int, default=None,
                   help="traffic seed (default: the scenario's)")
    p.add_argument("--horizon", type=float, default=None,
                   help="traffic horizon override, time units")
    p.add_argument("--arrivals", type=int, default=None,
                   help="stop after this many arrivals")
    p.add_argument("--phase-size", type=int, default=None,
                   help="phase length in arrivals (default: scenario)")
    p.add_argument("--out-dir", default=None,
                   help="output root (default: $SLICESIM_OUTPUT_ROOT or ./runs)")
    p.add_argument("--emit-plot-data", action="store_true",
                   help="also write plot-ready JSON series")
    p.add_argument("--export-trace", default=None, metavar="FILE",
                   help="write per-step placement records as JSON lines")
    p.add_argument("--events", default=None, metavar="FILE",
                   help="replay this exported event stream instead of "
                        "generating traffic")


def _events_for(scenario: Scenario, args):
    seed = scenario.seed if args.seed is None else args.seed
    if args.events:
        return load_events(args.events, scenario.classes), seed
    return scenario.generate_events(seed=seed, horizon=args.horizon), seed


def _agent_config(scenario: Scenario, args, seed_shift: int = 0) -> AgentConfig:
    defaults = dict(scenario.agent_defaults)
    variant = getattr(args, "variant", None) or defaults.pop("variant", "drl")
    overrides = {}
    for key in ("beta", "xi", "eta", "gamma"):
        flag = getattr(args, key, None)
        if flag is not None:
            overrides[key] = flag
        elif key in defaults:
            overrides[key] = float(defaults[key])
    if getattr(args, "actor_lr", None) is not None:
        overrides["actor_lr"] = args.actor_lr
    elif "actor_lr" in defaults:
        overrides["actor_lr"] = float(defaults["actor_lr"])
    if getattr(args, "critic_lr", None) is not None:
        overrides["critic_lr"] = args.critic_lr
    elif "critic_lr" in defaults:
        overrides["critic_lr"] = float(defaults["critic_lr"])
    base_seed = getattr(args, "agent_seed", None)
    if base_seed is None:
        base_seed = int(defaults.get("seed", 0))
    overrides["seed"] = base_seed + seed_shift
    if defaults.get("allow_any_node"):
        overrides["allow_any_node"] = bool(defaults["allow_any_node"])
    return AgentConfig.for_variant(variant, **overrides)


def _write_outputs(scenario: Scenario, args, records, base: str,
                   policy_name: str, seed: int, checkpoint=None,
                   extra: dict | None = None) -> None:
    out = _out_dir(args)
    phase_size = args.phase_size or scenario.phase_size
    class_ids = [c.id for c in scenario.classes]
    prefix = os.path.join(out, base)
    write_records_csv(records, prefix + ".csv")
    write_phase_csv(records, prefix + ".phases.csv", phase_size, class_ids)
    if args.emit_plot_data:
        write_plot_json(records, prefix + ".plot.json", phase_size, class_ids)
    manifest = RunManifest(
        scenario_hash=scenario.hash(), tool_version=TOOL_VERSION,
        policy=policy_name, seed=seed, arrivals=len(records),
        checkpoint=checkpoint, extra=extra or {})
    manifest.write(prefix + ".manifest.json")
    print(f"{base}: {len(records)} arrivals, "
          f"gar={sum(r.accepted for r in records) / max(len(records), 1):.4f}")


def _open_trace(args):
    if args.export_trace is None:
        return None, None
    fh = open(args.export_trace, "w")
    return fh, (lambda rec: fh.write(json.dumps(rec) + "\n"))


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    events, seed = _events_for(scenario, args)
    net = scenario.build_network()
    trace_fh, sink = _open_trace(args)
    try:
        if args.checkpoint:
            load_model = scenario.build_load_model(net)
            agent = Agent.load(args.checkpoint, net, load_model)
            policy = AgentPolicy(agent, train=False, trace_sink=sink)
        else:
            policy = HeuristicPolicy(trace_sink=sink)
        sim = Simulation(net, events, policy)
        records = sim.run(max_arrivals=args.arrivals, horizon=args.horizon)
    finally:
        if trace_fh:
            trace_fh.close()
    base = f"{scenario.name}-{policy.name}-seed{seed}"
    _write_outputs(scenario, args, records, base, policy.name, seed,
                   checkpoint=args.checkpoint)
    return 0


def cmd_train(args) -> int:
    scenario = load_scenario(args.scenario)
    out = _out_dir(args)
    for i in range(args.seeds):
        seed = (scenario.seed if args.seed is None else args.seed) + i
        config = _agent_config(scenario, args, seed_shift=i)
        net = scenario.build_network()
        load_model = scenario.build_load_model(net)
        events = (load_events(args.events, scenario.classes) if args.events
                  else scenario.generate_events(seed=seed,
                                                horizon=args.horizon))
        agent = Agent(config, net,
                      load_model if uses_load(config.variant) else None)
        trace_fh, sink = _open_trace(args) if i == 0 else (None, None)
        policy = AgentPolicy(agent, train=True, trace_sink=sink)
        base = f"{scenario.name}-{config.variant}-seed{seed}"
        ckpt_path = os.path.join(out, base + ".ckpt")

        hooks = None
        if args.checkpoint_every:
            def hooks(n, sim, _agent=agent, _base=base):
                if n % args.checkpoint_every == 0:
                    _agent.save(os.path.join(out, f"{_base}.ep{n}.ckpt"))
        try:
            sim = Simulation(net, events, policy)
            records = sim.run(max_arrivals=args.episodes,
                              horizon=args.horizon, on_arrival=hooks)
        finally:
            if trace_fh:
                trace_fh.close()
        agent.save(ckpt_path)
        _write_outputs(scenario, args, records, base, config.variant, seed,
                       checkpoint=ckpt_path,
                       extra={"variant": config.variant, "beta": config.beta,
                              "xi": config.xi, "eta": config.eta,
                              "gamma": config.gamma,
                              "actor_lr": config.actor_lr,
                              "critic_lr": config.critic_lr,
                              "agent_seed": config.seed,
                              "episodes": agent.episodes_trained})
    return 0


def cmd_evaluate(args) -> int:
    scenario = load_scenario(args.scenario)
    events, seed = _events_for(scenario, args)
    net = scenario.build_network()
    load_model = scenario.build_load_model(net)
    trace_fh, sink = _open_trace(args)
    try:
        agent = Agent.load(args.checkpoint, net, load_model)
        policy = AgentPolicy(agent, train=False, trace_sink=sink)
        sim = Simulation(net, events, policy)
        records = sim.run(max_arrivals=args.arrivals, horizon=args.horizon)
    finally:
        if trace_fh:
            trace_fh.close()
    base = f"{scenario.name}-{policy.name}-eval-seed{seed}"
    _write_outputs(scenario, args, records, base, policy.name, seed,
                   checkpoint=args.checkpoint,
                   extra={"events_file": args.events})
    return 0


def cmd_export_events(args) -> int:
    scenario = load_scenario(args.scenario)
    seed = scenario.seed if args.seed is None else args.seed
    events = scenario.generate_events(seed=seed, horizon=args.horizon)
    export_events(events, args.out)
    arrivals = sum(1 for e in events if isinstance(e, Arrival))
    print(f"{args.out}: {len(events)} events ({arrivals} arrivals), "
          f"seed {seed}")
    return 0


def cmd_inspect_checkpoint(args) -> int:
    manifest, arrays = load_checkpoint(args.path)
    if "manifest_json" in manifest:
        inner = json.loads(manifest["manifest_json"])
        inner["tensors"] = manifest.get("tensors", [])
        manifest = inner
    manifest["total_parameters"] = int(sum(
        int(v.size) for v in arrays.values()))
    print(json.dumps(manifest, indent=2, sort_keys=True, default=str))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicesim",
        description="Network-slice placement simulator and trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run heuristic or frozen placement")
    _add_common(p)
    p.add_argument("--policy", choices=["heuristic"], default="heuristic",
                   help="built-in policy (default heuristic); use "
                        "--checkpoint for a trained one")
    p.add_argument("--checkpoint", default=None,
                   help="run this trained agent frozen instead")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train an agent")
    _add_common(p)
    p.add_argument("--variant", choices=["drl", "edrl", "ha-drl", "ha-edrl"],
                   default=None, help="agent variant (default: scenario)")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--actor-lr", type=float, default=None, dest="actor_lr")
    p.add_argument("--critic-lr", type=float, default=None, dest="critic_lr")
    p.add_argument("--agent-seed", type=int, default=None, dest="agent_seed")
    p.add_argument("--seeds", type=int, default=1,
                   help="number of independent runs (seed, seed+1, ...)")
    p.add_argument("--episodes", type=int, default=None,
                   help="stop each run after this many arrivals")
    p.add_argument("--checkpoint-every", type=int, default=None,
                   help="also checkpoint every N arrivals")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate",
                       help="run a frozen checkpoint on fresh or replayed "
                            "traffic")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-events", help="write a traffic file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_events)

    p = sub.add_parser("inspect-checkpoint", help="print checkpoint manifest")
    p.add_argument("path")
    p.set_defaults(func=cmd_inspect_checkpoint)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SliceSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
