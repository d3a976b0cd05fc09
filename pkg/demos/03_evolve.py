# Evolving a flyer.
#
# One run: a population of small networks plays one episode per generation
# on a shared seed; the fittest breed the next generation.

import tempfile
from pathlib import Path

from neatbird.env import WorldConfig
from neatbird.evolution import EvolutionConfig, run_evolution
from neatbird.fastsim import play
from neatbird.harness import load_champion, write_run_outputs

world = WorldConfig()
run = run_evolution(EvolutionConfig(population_size=100, generations=20, master_seed=7), world)

for s in run.stats[::4]:
    print(f"gen {s.generation_index:2d}  max {s.max_score:6.0f}  average {s.average_score:8.2f}")
print("champion scored", run.champion_score, "on episode seed", run.champion_seed)

# How well does the champion generalise to pipe layouts it never saw?
print("fresh seeds:", [play(run.champion, world, seed).score for seed in range(100, 105)])

# Per-generation CSV, its chart and the champion file.
out = Path(tempfile.mkdtemp())
for path in write_run_outputs(run, out):
    print("wrote", path)
champ = load_champion(out / "champion_pop100_seed7.txt")
print("reloaded champion replays to", play(champ.genome, champ.world_config, champ.episode_seed).score)
