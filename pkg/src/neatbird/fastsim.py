"""Compiled episode runner for genome policies.

Same arithmetic, in the same order, as ``env.step`` driven by
``genome.genome_policy``; the test suite checks the two agree exactly.
It exists because evolved birds routinely fly for hundreds of thousands
of frames.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .env import COLLISION_FROM_CODE, EpisodeResult, WorldConfig, pipe_units
from .genome import CompiledNet, Genome, compile_genome

_UNITS_EXHAUSTED = -1


@numba.njit(cache=True)
def _episode(
    gravity, jump, scroll, gap, spacing, height, width, bird_x, radius, pipe_width,
    gap_lo, gap_hi, cap, scale,
    units, bias, edge_start, edge_src, edge_weight, output_slot,
):  # fmt: skip
    max_pipes = int(width / spacing) + 4
    xs = np.empty(max_pipes)
    tops = np.empty(max_pipes)
    bots = np.empty(max_pipes)
    passed = np.zeros(max_pipes, dtype=np.bool_)
    values = np.empty(3 + bias.shape[0])

    top = min(gap_lo + math.floor(units[0] * (gap_hi - gap_lo + 1)), gap_hi)
    xs[0] = width
    tops[0] = float(top)
    bots[0] = top + gap
    n = 1
    drawn = 1

    y = height / 2
    v = 0.0
    tick = 0
    score = 0
    while True:
        j = 0
        while passed[j]:
            j += 1
        values[0] = y / scale
        values[1] = (y - tops[j]) / scale
        values[2] = (bots[j] - y) / scale
        for k in range(bias.shape[0]):
            total = bias[k]
            for e in range(edge_start[k], edge_start[k + 1]):
                total += edge_weight[e] * values[edge_src[e]]
            values[3 + k] = math.tanh(total)

        if values[output_slot] > 0.0:
            v = jump
        y += v + 0.5 * gravity
        v += gravity
        tick += 1

        for i in range(n):
            xs[i] -= scroll
        while n > 0 and xs[0] + pipe_width < 0:
            for i in range(n - 1):
                xs[i] = xs[i + 1]
                tops[i] = tops[i + 1]
                bots[i] = bots[i + 1]
                passed[i] = passed[i + 1]
            n -= 1
        while xs[n - 1] + spacing <= width:
            if drawn >= units.shape[0]:
                return score, tick, _UNITS_EXHAUSTED
            top = min(gap_lo + math.floor(units[drawn] * (gap_hi - gap_lo + 1)), gap_hi)
            drawn += 1
            xs[n] = xs[n - 1] + spacing
            tops[n] = float(top)
            bots[n] = top + gap
            passed[n] = False
            n += 1

        for i in range(n):
            if not passed[i] and xs[i] + pipe_width < bird_x:
                passed[i] = True
                score += 1

        for i in range(n):
            if xs[i] < bird_x + radius and xs[i] + pipe_width > bird_x - radius:
                if y - radius < tops[i] or y + radius > bots[i]:
                    return score, tick, 1
        if y < 0:
            return score, tick, 2
        if y > height:
            return score, tick, 3
        if score >= cap:
            return score, tick, 4


def units_needed(config: WorldConfig) -> int:
    """Pipe-height draws that always suffice for one episode."""
    return int(config.max_score_cap) + int(config.screen_width / config.pipe_spacing) + 8


class EpisodeRunner:
    """Plays compiled genomes on one (config, seed) pipe sequence."""

    def __init__(self, config: WorldConfig, seed: int) -> None:
        config.validate()
        self.config = config
        self.seed = int(seed)
        self.units = pipe_units(self.seed, units_needed(config))
        lo, hi = config.gap_top_range
        self._physics = (
            float(config.gravity_accel), float(config.jump_velocity), float(config.scroll_velocity),
            float(config.pipe_gap), float(config.pipe_spacing), float(config.screen_height),
            float(config.screen_width), float(config.bird_x), float(config.bird_radius),
            float(config.pipe_width), int(lo), int(hi), int(config.max_score_cap),
            float(config.screen_height),
        )  # fmt: skip

    def run_compiled(self, net: CompiledNet) -> EpisodeResult:
        score, frames, code = _episode(
            *self._physics, self.units, net.bias, net.edge_start, net.edge_src, net.edge_weight, net.output_slot
        )
        if code == _UNITS_EXHAUSTED:
            raise RuntimeError("pipe height buffer exhausted")
        return EpisodeResult(score=int(score), frames=int(frames), end=COLLISION_FROM_CODE[int(code)])

    def run(self, genome: Genome) -> EpisodeResult:
        return self.run_compiled(compile_genome(genome))


def play(genome: Genome, config: WorldConfig, seed: int) -> EpisodeResult:
    return EpisodeRunner(config, seed).run(genome)
