# A tour of the headless game world.
#
# Nothing here draws pixels: the world is a handful of numbers stepped at a
# fixed rate, so every run with the same seed replays exactly.

from neatbird.env import Action, WorldConfig, new_world, observe, run_episode, step

config = WorldConfig()
print(config.to_text())

# One frame of free fall. Position moves by v + a/2 before velocity picks up
# the acceleration, so the drop after t frames is v0*t + a*t^2/2 exactly.
world = new_world(config, seed=0)
y0 = world.bird.y
for _ in range(10):
    world, kind = step(world, Action.NO_FLAP)
print("drop after 10 frames:", world.bird.y - y0, "closed form:", 0.5 * config.gravity_accel * 100)

# A flap resets the vertical velocity rather than adding to it; gravity
# then acts for the rest of that frame.
world, _ = step(world, Action.FLAP)
print("velocity after a flap frame:", world.bird.velocity_y, "=", config.jump_velocity, "+", config.gravity_accel)

# The observation is the bird height plus its distance to the two lips of
# the next gap. Those distances always add up to the gap size.
obs = observe(world)
print(obs, "sum:", obs.dist_to_top + obs.dist_to_bottom)

# Two trivial policies and how they die.
for name, policy in [("never flap", lambda o: 0), ("always flap", lambda o: 1)]:
    print(name, run_episode(config, seed=0, policy=policy))

# A hand-written controller: flap when the bird sinks close to the lower lip.
print("gap tracker", run_episode(config, seed=0, policy=lambda o: o.dist_to_bottom < 60))
