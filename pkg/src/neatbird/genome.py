"""Genome encoding, feed-forward evaluation and genetic operators.

A genome is a node list plus an ordered list of connection genes. Each
connection gene is one column of the chromosome table::

    Weight   0.25 2.31 1.55 ...
    From     1    2    3    ...
    To       2    3    2    ...
    Enabled  1    0    1    ...

Genomes are immutable; every operator returns a new one.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .env import Action, Observation

NUM_INPUTS = 3
INPUT_IDS = (0, 1, 2)
OUTPUT_ID = 3


class NodeRole(enum.Enum):
    INPUT = "input"
    HIDDEN = "hidden"
    OUTPUT = "output"


@dataclass(frozen=True)
class NodeGene:
    id: int
    role: NodeRole
    bias: float = 0.0


@dataclass(frozen=True)
class ConnectionGene:
    weight: float
    source: int
    target: int
    enabled: int = 1
    innovation: int = -1

    @property
    def key(self) -> tuple[int, int]:
        return (self.source, self.target)


@dataclass(frozen=True)
class Genome:
    nodes: tuple[NodeGene, ...]
    connections: tuple[ConnectionGene, ...]
    fitness: float | None = None

    def node(self, node_id: int) -> NodeGene:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def node_ids(self) -> set[int]:
        return {n.id for n in self.nodes}

    def with_fitness(self, fitness: float | None) -> Genome:
        return replace(self, fitness=fitness)

    def structure(self) -> tuple:
        """Everything but fitness; equal structures evaluate identically."""
        return (self.nodes, self.connections)


class GenomeError(ValueError):
    pass


class CycleError(GenomeError):
    pass


# --------------------------------------------------------------------------
# chromosome table and text form


@dataclass(frozen=True)
class ChromosomeTable:
    """Column-wise view of the connection genes."""

    weight: tuple[float, ...]
    source: tuple[int, ...]
    target: tuple[int, ...]
    enabled: tuple[int, ...]
    innovation: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.weight)
        cols = [self.source, self.target, self.enabled]
        if self.innovation is not None:
            cols.append(self.innovation)
        if any(len(c) != n for c in cols):
            raise GenomeError("chromosome table rows have different lengths")

    def __len__(self) -> int:
        return len(self.weight)

    def rows(self) -> list[str]:
        """The four table rows as text, one value per column."""
        return [
            _row("Weight", (repr(float(w)) for w in self.weight)),
            _row("From", map(str, self.source)),
            _row("To", map(str, self.target)),
            _row("Enabled", map(str, self.enabled)),
        ]


def _row(label: str, values: Iterable[str]) -> str:
    return " ".join([label, *values])


def encode(genome: Genome) -> ChromosomeTable:
    conns = genome.connections
    return ChromosomeTable(
        weight=tuple(c.weight for c in conns),
        source=tuple(c.source for c in conns),
        target=tuple(c.target for c in conns),
        enabled=tuple(c.enabled for c in conns),
        innovation=tuple(c.innovation for c in conns),
    )


def decode(table: ChromosomeTable, nodes: Iterable[NodeGene], fitness: float | None = None) -> Genome:
    nodes = tuple(sorted(nodes, key=lambda n: n.id))
    ids = {n.id for n in nodes}
    if len(ids) != len(nodes):
        raise GenomeError("duplicate node id")
    innovations = table.innovation if table.innovation is not None else tuple(range(len(table)))
    seen: set[tuple[int, int]] = set()
    conns = []
    for w, s, t, e, inn in zip(table.weight, table.source, table.target, table.enabled, innovations):
        for end in (s, t):
            if end not in ids:
                raise GenomeError(f"unknown node id {end}")
        if e not in (0, 1):
            raise GenomeError(f"enabled flag must be 0 or 1, got {e!r}")
        if (s, t) in seen:
            raise GenomeError(f"duplicate connection {s}->{t}")
        seen.add((s, t))
        conns.append(ConnectionGene(weight=float(w), source=int(s), target=int(t), enabled=int(e), innovation=int(inn)))
    return Genome(nodes=nodes, connections=tuple(conns), fitness=fitness)


def dumps(genome: Genome, header: Sequence[str] = ()) -> str:
    """Line-oriented text form: optional ``#`` comments, a node list, then table rows."""
    table = encode(genome)
    lines = [f"# {h}" for h in header]
    lines.append(_row("Nodes", (f"{n.id}:{n.role.value}:{n.bias!r}" for n in genome.nodes)))
    lines.extend(table.rows())
    lines.append(_row("Innovation", map(str, table.innovation or ())))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Genome:
    rows: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        label, *values = line.split()
        if label in rows:
            raise GenomeError(f"line {lineno}: duplicate row {label!r}")
        rows[label] = values
    required = ("Nodes", "Weight", "From", "To", "Enabled")
    missing = [r for r in required if r not in rows]
    if missing:
        raise GenomeError(f"missing row(s): {', '.join(missing)}")
    unknown = set(rows) - set(required) - {"Innovation"}
    if unknown:
        raise GenomeError(f"unknown row(s): {', '.join(sorted(unknown))}")
    try:
        nodes = []
        for item in rows["Nodes"]:
            nid, role, bias = item.split(":")
            nodes.append(NodeGene(int(nid), NodeRole(role), float(bias)))
        table = ChromosomeTable(
            weight=tuple(float(v) for v in rows["Weight"]),
            source=tuple(int(v) for v in rows["From"]),
            target=tuple(int(v) for v in rows["To"]),
            enabled=tuple(int(v) for v in rows["Enabled"]),
            innovation=tuple(int(v) for v in rows["Innovation"]) if "Innovation" in rows else None,
        )
    except ValueError as exc:
        raise GenomeError(f"malformed genome text: {exc}") from None
    return decode(table, nodes)


def read_header(text: str) -> dict[str, str]:
    """``# key = value`` comment lines of a dumped genome."""
    out = {}
    for line in text.splitlines():
        if line.startswith("#") and "=" in line:
            key, _, value = line[1:].partition("=")
            out[key.strip()] = value.strip()
    return out


# --------------------------------------------------------------------------
# evaluation


def topological_order(genome: Genome) -> list[int]:
    """Node ids ordered so every enabled edge points forward; ties by id."""
    ids = sorted(genome.node_ids)
    indeg = {i: 0 for i in ids}
    out: dict[int, list[int]] = {i: [] for i in ids}
    for c in genome.connections:
        if c.enabled:
            indeg[c.target] += 1
            out[c.source].append(c.target)
    ready = [i for i in ids if indeg[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for m in out[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(ready, m)
    if len(order) != len(ids):
        raise CycleError("enabled connections contain a cycle")
    return order


@dataclass(frozen=True)
class CompiledNet:
    """Flat arrays for evaluating a genome; slots 0..2 hold the inputs.

    ``edge_start[k]:edge_start[k+1]`` indexes the incoming edges of slot
    ``NUM_INPUTS + k``. Slots follow topological order.
    """

    bias: np.ndarray
    edge_start: np.ndarray
    edge_src: np.ndarray
    edge_weight: np.ndarray
    output_slot: int


def compile_genome(genome: Genome) -> CompiledNet:
    order = [n for n in topological_order(genome) if n not in INPUT_IDS]
    slot = {nid: i for i, nid in enumerate(INPUT_IDS)}
    slot.update({nid: NUM_INPUTS + k for k, nid in enumerate(order)})
    incoming: dict[int, list[ConnectionGene]] = {nid: [] for nid in order}
    for c in genome.connections:
        if c.enabled:
            incoming[c.target].append(c)
    bias, start, src, weight = [], [0], [], []
    for nid in order:
        bias.append(genome.node(nid).bias)
        for c in incoming[nid]:
            src.append(slot[c.source])
            weight.append(c.weight)
        start.append(len(src))
    return CompiledNet(
        bias=np.asarray(bias, dtype=np.float64),
        edge_start=np.asarray(start, dtype=np.int64),
        edge_src=np.asarray(src, dtype=np.int64),
        edge_weight=np.asarray(weight, dtype=np.float64),
        output_slot=slot[OUTPUT_ID],
    )


def activate(genome: Genome, inputs: Sequence[float]) -> float:
    """Output of the network for three input values.

    Each non-input node computes ``tanh(bias + sum(w * value))`` over its
    enabled incoming edges, summed in genome order.
    """
    if len(inputs) != NUM_INPUTS:
        raise ValueError(f"expected {NUM_INPUTS} inputs, got {len(inputs)}")
    return _Evaluator(compile_genome(genome))(inputs)


class _Evaluator:
    def __init__(self, net: CompiledNet) -> None:
        self.bias = net.bias.tolist()
        self.start = net.edge_start.tolist()
        self.src = net.edge_src.tolist()
        self.weight = net.edge_weight.tolist()
        self.output_slot = net.output_slot

    def __call__(self, inputs: Sequence[float]) -> float:
        values = [float(x) for x in inputs]
        src, weight, start = self.src, self.weight, self.start
        for k, b in enumerate(self.bias):
            total = b
            for e in range(start[k], start[k + 1]):
                total += weight[e] * values[src[e]]
            values.append(math.tanh(total))
        return values[self.output_slot]


def decide(genome: Genome, obs: Observation, scale: float = 800.0) -> Action:
    """Flap iff the network output is strictly positive.

    Observations are divided by ``scale`` (the screen height) first.
    """
    return Action.FLAP if activate(genome, obs.as_inputs(scale)) > 0.0 else Action.NO_FLAP


def genome_policy(genome: Genome, scale: float = 800.0):
    """A ``run_episode`` policy that reuses one compiled network."""
    evaluate = _Evaluator(compile_genome(genome))

    def policy(obs: Observation) -> Action:
        return Action.FLAP if evaluate(obs.as_inputs(scale)) > 0.0 else Action.NO_FLAP

    return policy


# --------------------------------------------------------------------------
# invariants


def violations(genome: Genome) -> list[str]:
    """Every broken genome invariant, as readable messages. Empty means valid."""
    problems = []
    ids = [n.id for n in genome.nodes]
    if len(set(ids)) != len(ids):
        problems.append("duplicate node ids")
    roles = {n.id: n.role for n in genome.nodes}
    inputs = [i for i, r in roles.items() if r is NodeRole.INPUT]
    outputs = [i for i, r in roles.items() if r is NodeRole.OUTPUT]
    if sorted(inputs) != list(INPUT_IDS):
        problems.append(f"input nodes must be {INPUT_IDS}, got {sorted(inputs)}")
    if outputs != [OUTPUT_ID]:
        problems.append(f"output node must be {OUTPUT_ID}, got {outputs}")
    seen = set()
    for c in genome.connections:
        if c.enabled not in (0, 1):
            problems.append(f"{c.source}->{c.target}: enabled={c.enabled!r}")
        if c.source not in roles or c.target not in roles:
            problems.append(f"{c.source}->{c.target}: unknown endpoint")
            continue
        if c.key in seen:
            problems.append(f"{c.source}->{c.target}: duplicate edge")
        seen.add(c.key)
        if c.source == c.target:
            problems.append(f"{c.source}->{c.target}: self loop")
        if roles[c.target] is NodeRole.INPUT:
            problems.append(f"{c.source}->{c.target}: edge into an input")
        if roles[c.source] is NodeRole.OUTPUT:
            problems.append(f"{c.source}->{c.target}: edge out of the output")
        if not math.isfinite(c.weight):
            problems.append(f"{c.source}->{c.target}: non-finite weight")
    if not problems:
        try:
            topological_order(genome)
        except CycleError:
            problems.append("enabled connections contain a cycle")
    return problems


def _reaches(edges: Iterable[tuple[int, int]], start: int, goal: int) -> bool:
    adj: dict[int, list[int]] = {}
    for s, t in edges:
        adj.setdefault(s, []).append(t)
    stack, seen = [start], {start}
    while stack:
        n = stack.pop()
        if n == goal:
            return True
        for m in adj.get(n, ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return False


def _descendants(adj: dict[int, list[int]], start: int) -> set[int]:
    stack, seen = [start], {start}
    while stack:
        for m in adj.get(stack.pop(), ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def creates_cycle(genome: Genome, source: int, target: int) -> bool:
    """Whether enabling ``source -> target`` would close a directed cycle."""
    if source == target:
        return True
    enabled = [c.key for c in genome.connections if c.enabled]
    return _reaches(enabled, target, source)


# --------------------------------------------------------------------------
# construction and innovation bookkeeping


class InnovationTracker:
    """Hands out innovation numbers and hidden-node ids.

    Identical structural mutations get identical numbers: the same
    ``(source, target)`` edge always maps to one innovation, and splitting
    the same connection gene yields the same node id unless the genome
    already holds that node. Not thread-safe; owned by the evolution loop.
    """

    def __init__(self, next_innovation: int = 0, next_node: int = OUTPUT_ID + 1) -> None:
        self._edges: dict[tuple[int, int], int] = {}
        self._splits: dict[int, int] = {}
        self.next_innovation = next_innovation
        self.next_node = next_node

    @classmethod
    def from_population(cls, pop: Iterable[Genome]) -> InnovationTracker:
        tracker = cls()
        for genome in pop:
            for c in genome.connections:
                tracker._edges.setdefault(c.key, c.innovation)
                tracker.next_innovation = max(tracker.next_innovation, c.innovation + 1)
            for n in genome.nodes:
                tracker.next_node = max(tracker.next_node, n.id + 1)
        return tracker

    def innovation(self, source: int, target: int) -> int:
        key = (source, target)
        if key not in self._edges:
            self._edges[key] = self.next_innovation
            self.next_innovation += 1
        return self._edges[key]

    def split_node(self, innovation: int, taken: set[int]) -> int:
        node = self._splits.get(innovation)
        if node is None or node in taken:
            node = self.next_node
            self.next_node += 1
            self._splits.setdefault(innovation, node)
        return node


def initial_genome(rng: np.random.Generator, tracker: InnovationTracker) -> Genome:
    """Three inputs wired straight to the output with weights uniform in [-1, 1]."""
    nodes = tuple(NodeGene(i, NodeRole.INPUT) for i in INPUT_IDS) + (NodeGene(OUTPUT_ID, NodeRole.OUTPUT),)
    weights = rng.uniform(-1.0, 1.0, size=NUM_INPUTS)
    conns = tuple(
        ConnectionGene(float(w), i, OUTPUT_ID, 1, tracker.innovation(i, OUTPUT_ID))
        for i, w in zip(INPUT_IDS, weights)
    )
    return Genome(nodes=nodes, connections=conns)


# --------------------------------------------------------------------------
# mutation


@dataclass(frozen=True)
class MutationParams:
    weight_rate: float = 0.03
    weight_sigma: float = 0.5
    bias_rate: float = 0.03
    bias_sigma: float = 0.5
    add_connection_rate: float = 0.05
    add_node_rate: float = 0.02
    toggle_enable_rate: float = 0.01
    new_weight_range: float = 1.0

    def __post_init__(self) -> None:
        for name in ("weight_rate", "bias_rate", "add_connection_rate", "add_node_rate", "toggle_enable_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        for name in ("weight_sigma", "bias_sigma", "new_weight_range"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def frozen(cls) -> MutationParams:
        """All rates zero: mutation is the identity."""
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def mutate(genome: Genome, rng: np.random.Generator, params: MutationParams, tracker: InnovationTracker) -> Genome:
    """Perturb weights and biases, then maybe add an edge, split an edge, toggle an edge.

    Fitness is cleared on the result unless nothing changed.
    """
    conns = list(genome.connections)
    nodes = list(genome.nodes)
    changed = False

    if params.weight_rate > 0:
        hits = rng.random(len(conns)) < params.weight_rate
        noise = rng.normal(0.0, params.weight_sigma, size=len(conns))
        for i in np.flatnonzero(hits):
            conns[i] = replace(conns[i], weight=conns[i].weight + float(noise[i]))
            changed = True
    if params.bias_rate > 0:
        hits = rng.random(len(nodes)) < params.bias_rate
        noise = rng.normal(0.0, params.bias_sigma, size=len(nodes))
        for i in np.flatnonzero(hits):
            if nodes[i].role is not NodeRole.INPUT:
                nodes[i] = replace(nodes[i], bias=nodes[i].bias + float(noise[i]))
                changed = True

    current = Genome(tuple(nodes), tuple(conns), genome.fitness)
    if params.add_connection_rate > 0 and rng.random() < params.add_connection_rate:
        current, did = _add_connection(current, rng, params, tracker)
        changed |= did
    if params.add_node_rate > 0 and rng.random() < params.add_node_rate:
        current, did = _add_node(current, rng, tracker)
        changed |= did
    if params.toggle_enable_rate > 0 and rng.random() < params.toggle_enable_rate:
        current, did = _toggle(current, rng)
        changed |= did
    return current.with_fitness(None) if changed else genome


def _add_connection(
    genome: Genome, rng: np.random.Generator, params: MutationParams, tracker: InnovationTracker
) -> tuple[Genome, bool]:
    existing = {c.key for c in genome.connections}
    sources = [n.id for n in genome.nodes if n.role is not NodeRole.OUTPUT]
    targets = [n.id for n in genome.nodes if n.role is not NodeRole.INPUT]
    adj: dict[int, list[int]] = {}
    for c in genome.connections:
        if c.enabled:
            adj.setdefault(c.source, []).append(c.target)
    # s -> t closes a cycle iff s is reachable from t
    below = {t: _descendants(adj, t) for t in targets}
    candidates = [(s, t) for s in sources for t in targets if s not in below[t] and (s, t) not in existing]
    if not candidates:
        return genome, False
    s, t = candidates[int(rng.integers(len(candidates)))]
    w = float(rng.uniform(-params.new_weight_range, params.new_weight_range))
    conn = ConnectionGene(w, s, t, 1, tracker.innovation(s, t))
    return replace(genome, connections=genome.connections + (conn,)), True


def _add_node(genome: Genome, rng: np.random.Generator, tracker: InnovationTracker) -> tuple[Genome, bool]:
    enabled = [i for i, c in enumerate(genome.connections) if c.enabled]
    if not enabled:
        return genome, False
    idx = enabled[int(rng.integers(len(enabled)))]
    old = genome.connections[idx]
    node_id = tracker.split_node(old.innovation, genome.node_ids)
    existing = {c.key for c in genome.connections}
    if (old.source, node_id) in existing or (node_id, old.target) in existing:
        return genome, False
    conns = list(genome.connections)
    conns[idx] = replace(old, enabled=0)
    conns.append(ConnectionGene(1.0, old.source, node_id, 1, tracker.innovation(old.source, node_id)))
    conns.append(ConnectionGene(old.weight, node_id, old.target, 1, tracker.innovation(node_id, old.target)))
    nodes = tuple(sorted(genome.nodes + (NodeGene(node_id, NodeRole.HIDDEN),), key=lambda n: n.id))
    return Genome(nodes, tuple(conns), genome.fitness), True


def _toggle(genome: Genome, rng: np.random.Generator) -> tuple[Genome, bool]:
    if not genome.connections:
        return genome, False
    idx = int(rng.integers(len(genome.connections)))
    c = genome.connections[idx]
    if not c.enabled and creates_cycle(genome, c.source, c.target):
        return genome, False
    conns = list(genome.connections)
    conns[idx] = replace(c, enabled=1 - c.enabled)
    return replace(genome, connections=tuple(conns)), True


# --------------------------------------------------------------------------
# crossover


def crossover(parent_a: Genome, parent_b: Genome, rng: np.random.Generator) -> Genome:
    """Align genes by innovation number.

    Matching genes take weight and enabled flag from a uniformly chosen
    parent. Disjoint and excess genes come from the fitter parent, or from
    ``parent_a`` on a tie. Edges that would close a cycle are disabled.
    """
    fa = parent_a.fitness if parent_a.fitness is not None else 0.0
    fb = parent_b.fitness if parent_b.fitness is not None else 0.0
    fitter, other = (parent_b, parent_a) if fb > fa else (parent_a, parent_b)
    other_genes = {c.innovation: c for c in other.connections}

    picks = rng.random(len(fitter.connections)) < 0.5
    genes = []
    for c, take_other in zip(fitter.connections, picks):
        match = other_genes.get(c.innovation)
        genes.append(match if match is not None and take_other else c)

    fitter_nodes = {n.id: n for n in fitter.nodes}
    other_nodes = {n.id: n for n in other.nodes}
    needed = set(INPUT_IDS) | {OUTPUT_ID} | {c.source for c in genes} | {c.target for c in genes}
    node_picks = rng.random(len(fitter.nodes)) < 0.5
    nodes = []
    for n, take_other in zip(fitter.nodes, node_picks):
        if n.id not in needed:
            continue
        match = other_nodes.get(n.id)
        nodes.append(match if match is not None and take_other else n)
    missing = needed - {n.id for n in nodes}
    nodes.extend(other_nodes.get(i) or fitter_nodes[i] for i in sorted(missing))

    # restore acyclicity greedily in gene order
    kept: list[tuple[int, int]] = []
    keys: set[tuple[int, int]] = set()
    result = []
    for c in genes:
        if c.key in keys:
            continue
        keys.add(c.key)
        if c.enabled:
            if c.source == c.target or _reaches(kept, c.target, c.source):
                c = replace(c, enabled=0)
            else:
                kept.append(c.key)
        result.append(c)

    return Genome(tuple(sorted(nodes, key=lambda n: n.id)), tuple(result))
