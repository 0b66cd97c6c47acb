"""Hypothesis strategies for small random models."""
import random

from hypothesis import strategies as st

from oracles import random_model


@st.composite
def models(draw, max_states=6, max_actions=3):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, max_states))
    k = draw(st.integers(1, max_actions))
    return random_model(random.Random(seed), n, k)
