"""Exit criteria for the whole package, one test per criterion.

Each test records a PASS/FAIL (or FLAG for the soft statistical ones) line
that is printed in the pytest terminal summary.
"""

import statistics
import time
import warnings

import numpy as np
import pytest

from conftest import brute_force_output, invariant_problems, random_genome
from neatbird.cli import main
from neatbird.env import Action, CollisionKind, WorldConfig, new_world, observe, step
from neatbird.evolution import EvolutionConfig, SeedPolicy, run_evolution
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
    loads,
    mutate,
)
from neatbird.harness import SweepSpec, run_sweep

TABLE_NODES = [NodeGene(i, NodeRole.HIDDEN) for i in (1, 2, 3, 4)]
TABLES = {
    "Table 1": (
        ChromosomeTable(
            (0.25, 2.31, 1.55, 0.98, 5.11, 1.17, 0.07), (1, 2, 3, 1, 3, 4, 2), (2, 3, 2, 3, 4, 3, 4), (1, 0, 1, 1, 1, 1, 1)
        ),
        "Weight 0.25 2.31 1.55 0.98 5.11 1.17 0.07\nFrom 1 2 3 1 3 4 2\nTo 2 3 2 3 4 3 4\nEnabled 1 0 1 1 1 1 1",
    ),
    "Table 2": (
        ChromosomeTable(
            (0.25, 5.11, 1.17, 0.98, 2.31, 1.55, 0.07), (1, 2, 4, 1, 3, 3, 4), (3, 4, 2, 4, 2, 4, 3), (1, 1, 1, 0, 1, 1, 0)
        ),
        "Weight 0.25 5.11 1.17 0.98 2.31 1.55 0.07\nFrom 1 2 4 1 3 3 4\nTo 3 4 2 4 2 4 3\nEnabled 1 1 1 0 1 1 0",
    ),
}
SEEDS = (0, 1, 2, 3, 4)


def check(report, number, name, ok, detail):
    report(number, name, "PASS" if ok else "FAIL", detail)
    assert ok, detail


def flag(report, number, name, ok, detail):
    report(number, name, "PASS" if ok else "FLAG", detail)
    if not ok:
        warnings.warn(f"criterion {number} ({name}) flagged: {detail}")


def test_01_physics_oracle(acceptance_report):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        v0, a, t = rng.uniform(-20, 20), rng.uniform(0, 5), int(rng.integers(1, 101))
        w = new_world(WorldConfig(gravity_accel=a), 0)
        w.bird.velocity_y = v0
        y0 = w.bird.y
        for _ in range(t):
            w.terminal = None  # only kinematics are under test
            step(w, Action.NO_FLAP)
        worst = max(worst, abs((w.bird.y - y0) - (v0 * t + 0.5 * a * t * t)))
    elapsed = time.perf_counter() - start
    check(acceptance_report, 1, "physics oracle", worst <= 1e-9 and elapsed < 1.0,
          f"max |error| = {worst:.2e} (tol 1e-9), {elapsed:.2f}s (limit 1s)")  # fmt: skip


def test_02_gap_conservation(acceptance_report):
    start = time.perf_counter()
    cfg = WorldConfig()
    rng = np.random.default_rng(7)
    w = new_world(cfg, 0)
    steps = bad = pipes = 0
    margin = rng.uniform(10, 150)
    while steps < 100_000:
        obs = observe(w)
        bad += obs.dist_to_top + obs.dist_to_bottom != 320
        # noisy gap tracking reaches deep into episodes as well as early deaths
        flap = obs.dist_to_bottom < margin if rng.random() > 0.1 else rng.random() < 0.5
        w, kind = step(w, flap)
        steps += 1
        if kind is not CollisionKind.NONE:
            pipes += w.score
            w = new_world(cfg, int(rng.integers(2**63)))
            margin = rng.uniform(10, 150)
    elapsed = time.perf_counter() - start
    check(acceptance_report, 2, "gap conservation", bad == 0 and elapsed < 5.0,
          f"{bad} violations in {steps} steps ({pipes} pipes crossed), {elapsed:.2f}s (limit 5s)")  # fmt: skip


def test_03_encoding_fidelity(acceptance_report):
    start = time.perf_counter()
    problems = []
    for name, (table, rows) in TABLES.items():
        text = dumps(decode(table, TABLE_NODES))
        if "\n".join(text.splitlines()[1:5]) != rows:
            problems.append(f"{name} rows differ")
        if dumps(loads(text)) != text or encode(loads(text)).rows() != rows.splitlines():
            problems.append(f"{name} text round trip differs")
    rng = np.random.default_rng(3)
    tracker = InnovationTracker()
    for _ in range(1000):
        g = random_genome(rng, tracker)
        if decode(encode(g), g.nodes).connections != g.connections or loads(dumps(g)).structure() != g.structure():
            problems.append("random round trip lost data")
    elapsed = time.perf_counter() - start
    check(acceptance_report, 3, "encoding fidelity", not problems and elapsed < 1.0,
          f"{problems or 'Tables 1-2 byte-identical, 1000 random round trips lossless'}, {elapsed:.2f}s (limit 1s)")  # fmt: skip


def test_04_network_oracle(acceptance_report):
    rng = np.random.default_rng(4)
    tracker = InnovationTracker()
    worst, outside, hidden = 0.0, 0, 0
    for _ in range(1000):
        g = random_genome(rng, tracker, max_nodes=6)
        hidden += len(g.nodes) > 4
        x = rng.uniform(-1, 1, size=3)
        out = activate(g, x)
        worst = max(worst, abs(out - brute_force_output(g, x)))
        outside += not -1 < out < 1
    zero = initial_genome(rng, tracker)
    zero = zero.__class__(zero.nodes, tuple(c.__class__(0.0, c.source, c.target, 1, c.innovation) for c in zero.connections))
    tanh0 = activate(zero, (0.3, -0.2, 0.9))
    ok = worst <= 1e-12 and outside == 0 and tanh0 == 0.0
    check(acceptance_report, 4, "network oracle", ok,
          f"max |error| = {worst:.1e} (tol 1e-12) over 1000 genomes ({hidden} with hidden nodes), "
          f"{outside} outputs outside (-1,1), tanh(0) -> {tanh0}")  # fmt: skip


def test_05_structural_safety(acceptance_report):
    rng = np.random.default_rng(5)
    tracker = InnovationTracker()
    params = MutationParams(weight_rate=0.3, bias_rate=0.3, add_connection_rate=0.5, add_node_rate=0.4, toggle_enable_rate=0.3)
    pool = [initial_genome(rng, tracker).with_fitness(0.0) for _ in range(32)]
    bad = checked = largest = 0
    for _ in range(10_000):
        g = pool[int(rng.integers(len(pool)))]
        for _ in range(int(rng.integers(1, 5))):
            if rng.random() < 0.5:
                mate = pool[int(rng.integers(len(pool)))]
                g = crossover(g, mate, rng)
            else:
                g = mutate(g, rng, params, tracker)
            g = g.with_fitness(float(rng.integers(0, 10)))
            checked += 1
            bad += bool(invariant_problems(g))
        largest = max(largest, len(g.nodes))
        # recycle oversized genomes so the pool keeps mixing small and large topologies
        pool[int(rng.integers(len(pool)))] = g if len(g.nodes) <= 30 else initial_genome(rng, tracker).with_fitness(0.0)
    check(acceptance_report, 5, "structural safety", bad == 0,
          f"{bad} invalid genomes in {checked} operator applications over 10000 chains (largest genome {largest} nodes)")  # fmt: skip


def test_06_elitism_monotonicity(acceptance_report):
    world = WorldConfig()
    drops = []
    finals = []
    for seed in SEEDS:
        cfg = EvolutionConfig(population_size=100, generations=50, elitism_count=2, master_seed=seed,
                              episode_seed_policy=SeedPolicy.FIXED_GLOBAL)  # fmt: skip
        best = [s.best_fitness for s in run_evolution(cfg, world).stats]
        drops += [(seed, g) for g in range(1, len(best)) if best[g] < best[g - 1]]
        finals.append(best[-1])
    check(acceptance_report, 6, "elitism monotonicity", not drops,
          f"{len(drops)} decreases over 5 seeds x 50 generations; final best fitness {[round(f, 3) for f in finals]}")  # fmt: skip


def test_07_cli_determinism(acceptance_report, tmp_path, capsys):
    argv = ["run", "--population", "100", "--generations", "50", "--master-seed", "7"]
    for d in ("first", "second"):
        assert main([*argv, "--out", str(tmp_path / d)]) == 0
    capsys.readouterr()
    files = sorted(p.name for p in (tmp_path / "first").iterdir())
    differing = [f for f in files if (tmp_path / "first" / f).read_bytes() != (tmp_path / "second" / f).read_bytes()]
    kinds = {f.rsplit(".", 1)[1] for f in files}
    check(acceptance_report, 7, "determinism", not differing and kinds == {"csv", "svg", "txt"},
          f"{len(files)} files ({', '.join(files)}), differing: {differing or 'none'}")  # fmt: skip


def test_08_desk_scale_learning(acceptance_report):
    start = time.perf_counter()
    world = WorldConfig()
    bests = []
    for seed in SEEDS:
        run = run_evolution(EvolutionConfig(population_size=100, generations=30, master_seed=seed), world)
        bests.append(max(s.max_score for s in run.stats))
    elapsed = time.perf_counter() - start
    median = statistics.median(bests)
    reached = sum(b >= 50 for b in bests)
    ok = median >= 20 and reached >= 3 and elapsed < 300
    check(acceptance_report, 8, "desk-scale learning", ok,
          f"best scores {[int(b) for b in bests]}, median {median:g} (need >= 20), "
          f"{reached}/5 seeds >= 50 (need >= 3), {elapsed:.1f}s (limit 300s)")  # fmt: skip


@pytest.fixture(scope="module")
def default_sweep(tmp_path_factory):
    """Default sweep: populations 20..160, 50 generations, 5 seeds."""
    out = tmp_path_factory.mktemp("sweep")
    start = time.perf_counter()
    report = run_sweep(SweepSpec(), out)
    return report, out, time.perf_counter() - start


def test_09_trend_reproduction(acceptance_report, default_sweep):
    report, _, elapsed = default_sweep
    by_pop = {p.population: p for p in report.populations}
    lo, hi = by_pop[20].median_average_score, by_pop[160].median_average_score
    curve = ", ".join(f"{p.population}:{p.median_average_score:.1f}" for p in report.populations)
    flag(acceptance_report, 9, "trend reproduction (soft)", hi > lo,
         f"median run-average score pop160 = {hi:.2f} vs pop20 = {lo:.2f}; curve {curve} (sweep {elapsed:.0f}s)")  # fmt: skip


def test_10_training_speed(acceptance_report, default_sweep):
    report, out, _ = default_sweep
    measured = {p.population: p.first_spike_generation for p in report.populations if p.population >= 100}
    ok = all(v is not None and v <= 5 for v in measured.values())
    flag(acceptance_report, 10, "training-speed proxy (soft)", ok,
         f"median first_spike_generation for populations >= 100: {measured} (threshold <= 5)")  # fmt: skip
    assert (out / "summary.csv").exists()
