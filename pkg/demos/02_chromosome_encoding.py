# Genomes as connection tables.
#
# A network is stored as a list of connection genes; each gene is one column
# of a four-row table (weight, from, to, enabled). This script rebuilds the
# two worked example tables, shows the text form and evaluates a small
# evolved network.

import numpy as np

from neatbird.genome import (
    ChromosomeTable,
    InnovationTracker,
    MutationParams,
    NodeGene,
    NodeRole,
    activate,
    crossover,
    decode,
    dumps,
    encode,
    initial_genome,
    mutate,
)

nodes = [NodeGene(i, NodeRole.HIDDEN) for i in (1, 2, 3, 4)]
parent = decode(
    ChromosomeTable((0.25, 2.31, 1.55, 0.98, 5.11, 1.17, 0.07), (1, 2, 3, 1, 3, 4, 2), (2, 3, 2, 3, 4, 3, 4), (1, 0, 1, 1, 1, 1, 1)),
    nodes,
)
child = decode(
    ChromosomeTable((0.25, 5.11, 1.17, 0.98, 2.31, 1.55, 0.07), (1, 2, 4, 1, 3, 3, 4), (3, 4, 2, 4, 2, 4, 3), (1, 1, 1, 0, 1, 1, 0)),
    nodes,
)
print("\n".join(encode(parent).rows()), end="\n\n")
print("\n".join(encode(child).rows()), end="\n\n")

# The text form adds the node list and innovation numbers so it round-trips.
print(dumps(parent))

# Real genomes start as three inputs wired straight to one output.
rng = np.random.default_rng(1)
tracker = InnovationTracker()
g = initial_genome(rng, tracker)
print("fresh genome output for (0.5, 0.1, 0.3):", activate(g, (0.5, 0.1, 0.3)))

# Mutation grows the topology; splitting an edge keeps behaviour close.
busy = MutationParams(add_connection_rate=0.5, add_node_rate=0.5)
for _ in range(6):
    g = mutate(g, rng, busy, tracker)
print(f"after mutation: {len(g.nodes)} nodes, {len(g.connections)} genes")

other = mutate(initial_genome(rng, tracker), rng, busy, tracker)
kid = crossover(g.with_fitness(3.0), other.with_fitness(1.0), rng)
print("child has exactly the fitter parent's edges:", {c.key for c in kid.connections} == {c.key for c in g.connections})
