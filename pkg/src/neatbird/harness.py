"""Population-size sweeps and their output files.

Layout under an output directory::

    pop<N>_seed<S>.csv           per-generation statistics
    pop<N>_seed<S>.svg           chart of the above
    champion_pop<N>_seed<S>.txt  best genome, with replay metadata
    summary.csv, summary.svg     one row per population size (sweeps only)

Every file is a pure function of the resolved configuration.
"""

from __future__ import annotations

import csv
import math
import statistics
import xml.etree.ElementTree as ET
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

from .env import ConfigError, WorldConfig, parse_world_config
from .evolution import EvolutionConfig, RunResult, run_evolution
from .genome import Genome, dumps, loads, read_header

DEFAULT_POPULATIONS = (20, 40, 60, 80, 100, 120, 140, 160)
GENERATION_COLUMNS = ("generation", "max_score", "average_score", "average_fitness")
SUMMARY_COLUMNS = ("population", "median_average_score", "median_max_score", "first_spike_generation")
SPIKE_FACTOR = 5.0


def fmt(x: float) -> str:
    return f"{x:.6f}"


def _write_lines(path: Path, lines: Sequence[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("".join(line + "\n" for line in lines))


# --------------------------------------------------------------------------
# single runs


def write_generation_csv(run: RunResult, path: str | Path) -> Path:
    lines = [",".join(GENERATION_COLUMNS)]
    for s in run.stats:
        lines.append(f"{s.generation_index},{fmt(s.max_score)},{fmt(s.average_score)},{fmt(s.average_fitness)}")
    _write_lines(Path(path), lines)
    return Path(path)


def first_spike_generation(average_scores: Sequence[float], factor: float = SPIKE_FACTOR) -> int | None:
    """Earliest generation whose average score reaches ``factor`` times generation 0's.

    A zero baseline counts any positive average as the spike. ``None`` if it never happens.
    """
    if not average_scores:
        return None
    base = average_scores[0]
    for g, avg in enumerate(average_scores):
        if (base > 0 and avg >= factor * base) or (base <= 0 and avg > 0):
            return g
    return None


@dataclass(frozen=True)
class RunSummary:
    population: int
    seed: int
    average_score: float
    max_score: float
    first_spike_generation: int | None


def summarize_rows(population: int, seed: int, rows: Sequence[dict[str, str]]) -> RunSummary:
    """Run-level aggregates from generation-CSV rows (values as written)."""
    averages = [float(r["average_score"]) for r in rows]
    return RunSummary(
        population=population,
        seed=seed,
        average_score=sum(averages) / len(averages),
        max_score=max(float(r["max_score"]) for r in rows),
        first_spike_generation=first_spike_generation(averages),
    )


def summarize_run(run: RunResult) -> RunSummary:
    # go through the formatted values so the summary can be recomputed from the CSV exactly
    rows = [{"average_score": fmt(s.average_score), "max_score": fmt(s.max_score)} for s in run.stats]
    return summarize_rows(run.evo_config.population_size, run.evo_config.master_seed, rows)


def champion_text(run: RunResult) -> str:
    header = [
        f"population = {run.evo_config.population_size}",
        f"master_seed = {run.evo_config.master_seed}",
        f"episode_seed = {run.champion_seed}",
        f"score = {run.champion_score:g}",
        f"fitness = {run.champion.fitness!r}",
    ]
    header += [f"world.{f.name} = {getattr(run.world_config, f.name)!r}" for f in fields(WorldConfig)]
    return dumps(run.champion, header)


@dataclass(frozen=True)
class Champion:
    genome: Genome
    episode_seed: int | None
    score: float | None
    world_config: WorldConfig | None


def load_champion(path: str | Path) -> Champion:
    """Parse a champion file; raises ``GenomeError``/``ConfigError`` on bad content."""
    text = Path(path).read_text()
    genome = loads(text)
    header = read_header(text)
    world_lines = [f"{k[len('world.'):]} = {v}" for k, v in header.items() if k.startswith("world.")]
    world = parse_world_config("\n".join(world_lines), source=str(path)) if world_lines else None
    seed = int(header["episode_seed"]) if "episode_seed" in header else None
    score = float(header["score"]) if "score" in header else None
    return Champion(genome, seed, score, world)


def cell_stem(population: int, seed: int) -> str:
    return f"pop{population}_seed{seed}"


def write_run_outputs(run: RunResult, out_dir: str | Path, dump_champion: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    stem = cell_stem(run.evo_config.population_size, run.evo_config.master_seed)
    csv_path = write_generation_csv(run, out_dir / f"{stem}.csv")
    svg_path = emit_line_chart(
        csv_path,
        ["average_score", "max_score"],
        out_dir / f"{stem}.svg",
        title=f"population {run.evo_config.population_size}, seed {run.evo_config.master_seed}",
    )
    written = [csv_path, svg_path]
    if dump_champion:
        path = out_dir / f"champion_{stem}.txt"
        _write_lines(path, champion_text(run).splitlines())
        written.append(path)
    return written


# --------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    population_sizes: tuple[int, ...] = DEFAULT_POPULATIONS
    generations: int = 50
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    world_config: WorldConfig = field(default_factory=WorldConfig)
    evo_overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.population_sizes:
            raise ConfigError("population_sizes", "must not be empty")
        if not self.seeds:
            raise ConfigError("seeds", "must not be empty")
        if any(p < 2 for p in self.population_sizes):
            raise ConfigError("population_sizes", "every size must be >= 2")
        if len(set(self.population_sizes)) != len(self.population_sizes):
            raise ConfigError("population_sizes", "sizes must be distinct")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds", "seeds must be distinct")

    def evo_config(self, population: int, seed: int) -> EvolutionConfig:
        return EvolutionConfig(
            population_size=population, generations=self.generations, master_seed=seed, **self.evo_overrides
        )


@dataclass(frozen=True)
class PopulationSummary:
    population: int
    median_average_score: float
    median_max_score: float
    first_spike_generation: float | None


@dataclass(frozen=True)
class SweepReport:
    runs: tuple[RunSummary, ...]
    populations: tuple[PopulationSummary, ...]


def _median_spike(spikes: Sequence[int | None]) -> float | None:
    value = statistics.median(math.inf if s is None else s for s in spikes)
    return None if math.isinf(value) else float(value)


def aggregate(runs: Sequence[RunSummary]) -> SweepReport:
    by_pop: dict[int, list[RunSummary]] = {}
    for r in runs:
        by_pop.setdefault(r.population, []).append(r)
    pops = tuple(
        PopulationSummary(
            population=p,
            median_average_score=statistics.median(r.average_score for r in rs),
            median_max_score=statistics.median(r.max_score for r in rs),
            first_spike_generation=_median_spike([r.first_spike_generation for r in rs]),
        )
        for p, rs in by_pop.items()
    )
    return SweepReport(runs=tuple(runs), populations=pops)


def write_sweep_summary(report: SweepReport, path: str | Path) -> Path:
    lines = [",".join(SUMMARY_COLUMNS)]
    for p in report.populations:
        spike = "NA" if p.first_spike_generation is None else fmt(p.first_spike_generation)
        lines.append(f"{p.population},{fmt(p.median_average_score)},{fmt(p.median_max_score)},{spike}")
    _write_lines(Path(path), lines)
    return Path(path)


def _run_cell(args: tuple[SweepSpec, int, int, str]) -> RunSummary:
    spec, population, seed, out_dir = args
    run = run_evolution(spec.evo_config(population, seed), spec.world_config)
    write_run_outputs(run, out_dir)
    return summarize_run(run)


def run_sweep(spec: SweepSpec, out_dir: str | Path, jobs: int = 1) -> SweepReport:
    """Run every (population, seed) cell, then write ``summary.csv`` and ``summary.svg``."""
    out_dir = Path(out_dir)
    cells = [(spec, p, s, str(out_dir)) for p in spec.population_sizes for s in spec.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_cell, cells))
    else:
        runs = [_run_cell(c) for c in cells]
    report = aggregate(runs)
    summary = write_sweep_summary(report, out_dir / "summary.csv")
    emit_line_chart(
        summary,
        ["median_average_score", "median_max_score"],
        out_dir / "summary.svg",
        title="median scores over initial population",
    )
    return report


# --------------------------------------------------------------------------
# charts

_SVG_NS = "http://www.w3.org/2000/svg"
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _read_csv(path: Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def emit_line_chart(
    csv_path: str | Path,
    columns: Sequence[str],
    path: str | Path,
    x_column: str | None = None,
    title: str | None = None,
    width: int = 640,
    height: int = 400,
) -> Path:
    """One polyline per column against ``x_column`` (default: the first CSV column).

    Raises ``ValueError`` for a missing column or an empty CSV; nothing is written then.
    Rows with a non-numeric value in a column are left out of that column's line.
    """
    csv_path, path = Path(csv_path), Path(path)
    header, rows = _read_csv(csv_path)
    if not header:
        raise ValueError(f"{csv_path}: no header")
    x_column = x_column or header[0]
    for name in [x_column, *columns]:
        if name not in header:
            raise ValueError(f"{csv_path}: missing column {name!r}")
    if not columns:
        raise ValueError("no columns requested")
    if not rows:
        raise ValueError(f"{csv_path}: no data rows")

    def num(s: str) -> float | None:
        try:
            v = float(s)
        except ValueError:
            return None
        return v if math.isfinite(v) else None

    series = {c: [(num(r[x_column]), num(r[c])) for r in rows] for c in columns}
    series = {c: [(x, y) for x, y in pts if x is not None and y is not None] for c, pts in series.items()}
    xs = [x for pts in series.values() for x, _ in pts] or [0.0]
    ys = [y for pts in series.values() for _, y in pts] or [0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x: float) -> float:
        return left + (x - x0) / (x1 - x0) * pw

    def py(y: float) -> float:
        return top + ph - (y - y0) / (y1 - y0) * ph

    svg = ET.Element("svg", xmlns=_SVG_NS, width=str(width), height=str(height), viewBox=f"0 0 {width} {height}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    if title:
        t = ET.SubElement(svg, "text", x=str(width / 2), y="22", attrib={"text-anchor": "middle", "font-size": "14"})
        t.text = title
    axes = ET.SubElement(svg, "g", stroke="black", attrib={"stroke-width": "1"})
    ET.SubElement(axes, "line", x1=str(left), y1=str(top + ph), x2=str(left + pw), y2=str(top + ph))
    ET.SubElement(axes, "line", x1=str(left), y1=str(top), x2=str(left), y2=str(top + ph))
    labels = ET.SubElement(svg, "g", attrib={"font-size": "11", "font-family": "sans-serif"})
    for value, anchor_x, anchor_y, align in (
        (x0, px(x0), top + ph + 16, "middle"),
        (x1, px(x1), top + ph + 16, "middle"),
        (y0, left - 6, py(y0) + 4, "end"),
        (y1, left - 6, py(y1) + 4, "end"),
    ):
        t = ET.SubElement(labels, "text", x=f"{anchor_x:.2f}", y=f"{anchor_y:.2f}", attrib={"text-anchor": align})
        t.text = f"{value:g}"
    xl = ET.SubElement(labels, "text", x=str(left + pw / 2), y=str(height - 10), attrib={"text-anchor": "middle"})
    xl.text = x_column

    for i, (name, pts) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        ET.SubElement(
            svg,
            "polyline",
            fill="none",
            stroke=color,
            points=" ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts),
            attrib={"data-column": name, "stroke-width": "1.5"},
        )
        legend = ET.SubElement(
            labels, "text", x=str(left + 10), y=str(top + 14 + 14 * i), fill=color
        )
        legend.text = name

    path.parent.mkdir(parents=True, exist_ok=True)
    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)
    return path


__all__ = [
    "Champion",
    "PopulationSummary",
    "RunSummary",
    "SweepReport",
    "SweepSpec",
    "aggregate",
    "champion_text",
    "emit_line_chart",
    "first_spike_generation",
    "load_champion",
    "run_sweep",
    "summarize_rows",
    "summarize_run",
    "write_generation_csv",
    "write_run_outputs",
    "write_sweep_summary",
]
