import numpy as np

from utils.rng import ARRIVALS, MOBILITY, PLACEMENT, RngStreams, stream


def test_same_seed_same_draws():
    a, b = RngStreams(42), RngStreams(42)
    assert a.arrivals.poisson(5.0, 20).tolist() == b.arrivals.poisson(5.0, 20).tolist()
    assert a.for_user(7).random() == b.for_user(7).random()


def test_streams_are_independent():
    assert stream(1, ARRIVALS).random() != stream(1, PLACEMENT).random()
    assert stream(1, MOBILITY, 0).random() != stream(1, MOBILITY, 1).random()


def test_user_stream_ignores_other_consumers():
    quiet = RngStreams(3)
    busy = RngStreams(3)
    busy.arrivals.random(1000)
    busy.placement.random(1000)
    busy.for_user(1).random(50)
    assert quiet.for_user(2).random() == busy.for_user(2).random()


def test_user_stream_is_cached_until_released():
    rs = RngStreams(9)
    g = rs.for_user(4)
    assert rs.for_user(4) is g
    first = g.random()
    rs.release(4)
    assert rs.for_user(4).random() == first
    assert isinstance(rs.shadowing, np.random.Generator)
