"""Headless, fixed-timestep Flappy-Bird-style world.

Coordinates are screen pixels with y growing downward; the roof is y=0 and
the ground is y=screen_height. One call to :func:`step` advances one frame.

The bird integrates position before velocity::

    y  += v + a/2
    v  += a

so after ``t`` flap-free frames the accumulated displacement is exactly
``v0*t + a*t**2/2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable

import numpy as np


class ConfigError(ValueError):
    """Raised for an invalid configuration value; ``field`` names the offender."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class Action(enum.IntEnum):
    NO_FLAP = 0
    FLAP = 1


class CollisionKind(enum.Enum):
    NONE = "None"
    PIPE_HIT = "PipeHit"
    ROOF_HIT = "RoofHit"
    GROUND_HIT = "GroundHit"
    SCORE_CAP_REACHED = "ScoreCapReached"


# Integer codes shared with the compiled episode kernel.
COLLISION_CODES = {
    CollisionKind.NONE: 0,
    CollisionKind.PIPE_HIT: 1,
    CollisionKind.ROOF_HIT: 2,
    CollisionKind.GROUND_HIT: 3,
    CollisionKind.SCORE_CAP_REACHED: 4,
}
COLLISION_FROM_CODE = {v: k for k, v in COLLISION_CODES.items()}


@dataclass(frozen=True)
class WorldConfig:
    """Physics and geometry constants, all in pixels and frames."""

    gravity_accel: float = 1.25
    jump_velocity: float = -10.5
    scroll_velocity: float = 9.0
    pipe_gap: float = 320.0
    pipe_spacing: float = 300.0
    screen_height: float = 800.0
    screen_width: float = 576.0
    bird_x: float = 100.0
    bird_radius: float = 12.0
    pipe_width: float = 80.0
    gap_center_min: float = 160.0
    gap_center_max: float = 640.0
    max_score_cap: int = 10_000

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ConfigError(f.name, f"must be finite, got {value!r}")
        if self.pipe_gap <= 0:
            raise ConfigError("pipe_gap", "must be > 0")
        if self.screen_height <= self.pipe_gap:
            raise ConfigError("screen_height", "must exceed pipe_gap")
        if self.screen_width <= 0:
            raise ConfigError("screen_width", "must be > 0")
        half = self.pipe_gap / 2
        if self.gap_center_min < half:
            raise ConfigError("gap_center_min", f"must be >= pipe_gap/2 = {half}")
        if self.gap_center_max > self.screen_height - half:
            raise ConfigError(
                "gap_center_max",
                f"must be <= screen_height - pipe_gap/2 = {self.screen_height - half}",
            )
        if self.gap_center_max < self.gap_center_min:
            raise ConfigError("gap_center_max", "must be >= gap_center_min")
        if self.scroll_velocity <= 0:
            raise ConfigError("scroll_velocity", "must be > 0")
        if self.pipe_width <= 0:
            raise ConfigError("pipe_width", "must be > 0")
        if self.pipe_spacing <= self.pipe_width:
            raise ConfigError("pipe_spacing", "must be > pipe_width")
        # keeps an unpassed pipe on screen at all times
        if self.pipe_spacing > self.screen_width - self.bird_x:
            raise ConfigError("pipe_spacing", "must be <= screen_width - bird_x")
        if not 0 < self.bird_x < self.screen_width:
            raise ConfigError("bird_x", "must lie inside the screen")
        if self.bird_radius < 0:
            raise ConfigError("bird_radius", "must be >= 0")
        if self.max_score_cap < 1 or int(self.max_score_cap) != self.max_score_cap:
            raise ConfigError("max_score_cap", "must be an integer >= 1")

    @property
    def gap_top_range(self) -> tuple[int, int]:
        """Inclusive integer range of legal ``gap_top_y`` values."""
        half = self.pipe_gap / 2
        return math.ceil(self.gap_center_min - half), math.floor(self.gap_center_max - half)

    def gap_top_from_unit(self, u: float) -> int:
        """Map a uniform draw in [0, 1) to an integer gap top."""
        lo, hi = self.gap_top_range
        return min(lo + math.floor(u * (hi - lo + 1)), hi)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n" for f in fields(self))


def parse_world_config(text: str, source: str = "<string>") -> WorldConfig:
    """Parse ``name = number`` lines; ``#`` starts a comment."""
    known = {f.name: f.type for f in fields(WorldConfig)}
    values: dict[str, float | int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, rhs = line.partition("=")
        name, rhs = name.strip(), rhs.strip()
        if not sep or not name or not rhs:
            raise ConfigError(name or "?", f"{source}:{lineno}: expected 'name = number'")
        if name not in known:
            raise ConfigError(name, f"{source}:{lineno}: unknown key")
        try:
            number = float(rhs)
        except ValueError:
            raise ConfigError(name, f"{source}:{lineno}: not a number: {rhs!r}") from None
        if name == "max_score_cap":
            if number != int(number):
                raise ConfigError(name, f"{source}:{lineno}: must be an integer")
            number = int(number)
        values[name] = number
    return WorldConfig(**values)


def load_world_config(path: str | Path) -> WorldConfig:
    path = Path(path)
    return parse_world_config(path.read_text(), source=str(path))


class PipeStream:
    """Seeded source of pipe heights.

    The k-th draw is the k-th double of ``numpy.random.default_rng(seed)``,
    regardless of how draws are batched, so the compiled evaluator can
    pre-draw the same sequence in one go.
    """

    _CHUNK = 256

    def __init__(self, seed: int, cursor: int = 0) -> None:
        self.seed = int(seed)
        self.cursor = 0
        self._rng = np.random.default_rng(self.seed)
        self._buffer = np.empty(0)
        while self.cursor < cursor:
            self.next_unit()

    def next_unit(self) -> float:
        if self.cursor >= len(self._buffer):
            self._buffer = np.concatenate([self._buffer, self._rng.random(self._CHUNK)])
        u = float(self._buffer[self.cursor])
        self.cursor += 1
        return u

    def copy(self) -> PipeStream:
        other = PipeStream.__new__(PipeStream)
        other.seed, other.cursor = self.seed, self.cursor
        other._rng = np.random.default_rng(self.seed)
        other._buffer = self._buffer.copy()
        other._rng.bit_generator.state = self._rng.bit_generator.state
        return other

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PipeStream):
            return NotImplemented
        return (self.seed, self.cursor) == (other.seed, other.cursor)

    def __repr__(self) -> str:
        return f"PipeStream(seed={self.seed}, cursor={self.cursor})"


def pipe_units(seed: int, n: int) -> np.ndarray:
    """First ``n`` draws of ``PipeStream(seed)`` as an array."""
    return np.random.default_rng(int(seed)).random(n)


@dataclass
class PipePair:
    x: float
    gap_top_y: float
    gap_bottom_y: float
    passed: bool = False


@dataclass
class BirdState:
    y: float
    velocity_y: float = 0.0


@dataclass(frozen=True)
class Observation:
    bird_y: float
    dist_to_top: float
    dist_to_bottom: float

    def as_inputs(self, scale: float) -> tuple[float, float, float]:
        return (self.bird_y / scale, self.dist_to_top / scale, self.dist_to_bottom / scale)


@dataclass
class WorldState:
    config: WorldConfig
    bird: BirdState
    pipes: list[PipePair]
    rng_stream: PipeStream
    tick: int = 0
    score: int = 0
    terminal: CollisionKind | None = None

    def copy(self) -> WorldState:
        return WorldState(
            config=self.config,
            bird=BirdState(self.bird.y, self.bird.velocity_y),
            pipes=[PipePair(p.x, p.gap_top_y, p.gap_bottom_y, p.passed) for p in self.pipes],
            rng_stream=self.rng_stream.copy(),
            tick=self.tick,
            score=self.score,
            terminal=self.terminal,
        )


class TerminalWorldError(RuntimeError):
    pass


def _spawn_pipe(world: WorldState, x: float) -> None:
    cfg = world.config
    top = cfg.gap_top_from_unit(world.rng_stream.next_unit())
    world.pipes.append(PipePair(x=x, gap_top_y=float(top), gap_bottom_y=top + cfg.pipe_gap))


def new_world(config: WorldConfig, seed: int) -> WorldState:
    config.validate()
    world = WorldState(
        config=config,
        bird=BirdState(y=config.screen_height / 2, velocity_y=0.0),
        pipes=[],
        rng_stream=PipeStream(seed),
    )
    _spawn_pipe(world, config.screen_width)
    return world


def step(world: WorldState, action: Action | int | bool) -> tuple[WorldState, CollisionKind]:
    """Advance ``world`` by one frame in place and return it with the collision outcome."""
    if world.terminal is not None:
        raise TerminalWorldError(f"world already ended with {world.terminal.value}")
    cfg = world.config
    bird = world.bird

    if action:
        bird.velocity_y = cfg.jump_velocity
    bird.y += bird.velocity_y + 0.5 * cfg.gravity_accel
    bird.velocity_y += cfg.gravity_accel
    world.tick += 1

    for pipe in world.pipes:
        pipe.x -= cfg.scroll_velocity
    while world.pipes and world.pipes[0].x + cfg.pipe_width < 0:
        world.pipes.pop(0)
    while world.pipes[-1].x + cfg.pipe_spacing <= cfg.screen_width:
        _spawn_pipe(world, world.pipes[-1].x + cfg.pipe_spacing)

    for pipe in world.pipes:
        if not pipe.passed and pipe.x + cfg.pipe_width < cfg.bird_x:
            pipe.passed = True
            world.score += 1

    kind = _collision(world)
    if kind is CollisionKind.NONE and world.score >= cfg.max_score_cap:
        kind = CollisionKind.SCORE_CAP_REACHED
    if kind is not CollisionKind.NONE:
        world.terminal = kind
    return world, kind


def _collision(world: WorldState) -> CollisionKind:
    cfg = world.config
    y, r = world.bird.y, cfg.bird_radius
    for pipe in world.pipes:
        if pipe.x < cfg.bird_x + r and pipe.x + cfg.pipe_width > cfg.bird_x - r:
            if y - r < pipe.gap_top_y or y + r > pipe.gap_bottom_y:
                return CollisionKind.PIPE_HIT
    if y < 0:
        return CollisionKind.ROOF_HIT
    if y > cfg.screen_height:
        return CollisionKind.GROUND_HIT
    return CollisionKind.NONE


def nearest_pipe(world: WorldState) -> PipePair:
    # pipes are sorted by x and passed ones come first
    for pipe in world.pipes:
        if not pipe.passed:
            return pipe
    raise AssertionError("spawning rule guarantees an unpassed pipe")


def observe(world: WorldState) -> Observation:
    pipe = nearest_pipe(world)
    y = world.bird.y
    return Observation(bird_y=y, dist_to_top=y - pipe.gap_top_y, dist_to_bottom=pipe.gap_bottom_y - y)


@dataclass(frozen=True)
class EpisodeResult:
    score: int
    frames: int
    end: CollisionKind


Policy = Callable[[Observation], "Action | int | bool"]


def run_episode(
    config: WorldConfig,
    seed: int,
    policy: Policy,
    trace: Callable[[WorldState, Action], None] | None = None,
) -> EpisodeResult:
    """Play one episode to termination. ``trace`` sees the state after every frame."""
    world = new_world(config, seed)
    kind = CollisionKind.NONE
    while kind is CollisionKind.NONE:
        action = Action(int(bool(policy(observe(world)))))
        world, kind = step(world, action)
        if trace is not None:
            trace(world, action)
    return EpisodeResult(score=world.score, frames=world.tick, end=kind)


__all__ = [
    "Action",
    "BirdState",
    "CollisionKind",
    "ConfigError",
    "EpisodeResult",
    "Observation",
    "PipePair",
    "PipeStream",
    "TerminalWorldError",
    "WorldConfig",
    "WorldState",
    "load_world_config",
    "new_world",
    "observe",
    "parse_world_config",
    "pipe_units",
    "run_episode",
    "step",
]
