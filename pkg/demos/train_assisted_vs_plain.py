"""Train a plain and a heuristic-assisted agent on the desk scenario.

Short run (600 arrivals each), enough to see the assisted agent start
stronger before the traffic oscillation ramps up. The 2000-arrival
comparison lives in the acceptance suite.
"""

from slicesim import (Agent, AgentConfig, AgentPolicy, Simulation, gar,
                      load_scenario, tar)

EPISODES = 600
PHASE = 200

scenario = load_scenario("desk")
first_phase = {}

for variant in ("drl", "ha-drl"):
    config = AgentConfig.for_variant(variant, beta=2.0, xi=1.0, eta=0.0,
                                     seed=0, actor_lr=2e-4, critic_lr=5e-3)
    net = scenario.build_network()
    events = scenario.generate_events(seed=0)
    agent = Agent(config, net)
    sim = Simulation(net, events, AgentPolicy(agent, train=True))
    records = sim.run(max_arrivals=EPISODES)

    phase_ratios = [tar(records, p, PHASE) for p in range(EPISODES // PHASE)]
    first_phase[variant] = phase_ratios[0]
    ratios = " ".join(f"{r:.3f}" for r in phase_ratios)
    print(f"{variant:7s} acceptance {gar(records):.3f} "
          f"per-{PHASE}-arrival phases: {ratios}")

gap = first_phase["ha-drl"] - first_phase["drl"]
print(f"first-phase head start from the heuristic assist: {gap:+.3f}")
