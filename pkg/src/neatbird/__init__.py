"""NEAT agents for a headless Flappy-Bird world."""
