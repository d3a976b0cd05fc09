import math

import numpy as np
import pytest

from neatbird.genome import (
    INPUT_IDS,
    OUTPUT_ID,
    Genome,
    InnovationTracker,
    MutationParams,
    NodeRole,
    initial_genome,
    mutate,
)

# aggressive rates so short chains reach interesting topologies
CHURN = MutationParams(
    weight_rate=0.5,
    bias_rate=0.5,
    add_connection_rate=0.5,
    add_node_rate=0.4,
    toggle_enable_rate=0.3,
)


def random_genome(rng, tracker=None, steps=None, max_nodes=None):
    tracker = tracker or InnovationTracker()
    g = initial_genome(rng, tracker)
    steps = int(rng.integers(0, 10)) if steps is None else steps
    for _ in range(steps):
        nxt = mutate(g, rng, CHURN, tracker)
        if max_nodes is not None and len(nxt.nodes) > max_nodes:
            continue
        g = nxt
    return g


def brute_force_output(genome: Genome, inputs) -> float:
    """Recursive evaluation straight from the definition, no ordering tricks."""
    nodes = {n.id: n for n in genome.nodes}
    incoming = {}
    for c in genome.connections:
        if c.enabled:
            incoming.setdefault(c.target, []).append(c)

    def value(nid, depth=0):
        if depth > len(nodes):
            raise RecursionError("cycle")
        if nodes[nid].role is NodeRole.INPUT:
            return float(inputs[INPUT_IDS.index(nid)])
        total = nodes[nid].bias
        for c in incoming.get(nid, ()):
            total += c.weight * value(c.source, depth + 1)
        return math.tanh(total)

    return value(OUTPUT_ID)


def invariant_problems(genome: Genome) -> list[str]:
    """Independent genome invariant check (DFS cycle search)."""
    problems = []
    roles = {}
    for n in genome.nodes:
        if n.id in roles:
            problems.append("dup node")
        roles[n.id] = n.role
    if sorted(i for i, r in roles.items() if r is NodeRole.INPUT) != [0, 1, 2]:
        problems.append("inputs")
    if [i for i, r in roles.items() if r is NodeRole.OUTPUT] != [OUTPUT_ID]:
        problems.append("output")
    keys = [(c.source, c.target) for c in genome.connections]
    if len(set(keys)) != len(keys):
        problems.append("dup edge")
    adj = {}
    for c in genome.connections:
        if c.enabled not in (0, 1) or type(c.enabled) is not int:
            problems.append("enabled")
        if c.source not in roles or c.target not in roles:
            problems.append("dangling")
            continue
        if c.source == c.target or roles[c.target] is NodeRole.INPUT or roles[c.source] is NodeRole.OUTPUT:
            problems.append("bad endpoint")
        if c.enabled:
            adj.setdefault(c.source, []).append(c.target)
    state = {}

    def dfs(n):
        state[n] = 1
        for m in adj.get(n, ()):
            if state.get(m) == 1:
                return True
            if m not in state and dfs(m):
                return True
        state[n] = 2
        return False

    if any(n not in state and dfs(n) for n in roles):
        problems.append("cycle")
    return problems


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    """Collects one status line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, name, status, detail):
        line = f"[{status}] criterion {number:>2} {name}: {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
