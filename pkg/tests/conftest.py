import functools

import pytest
from hypothesis import HealthCheck, settings

from discgen import make_instance, run_case1, run_case2

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def cached_run(name, p, steps, thin=False):
    inst = make_instance(name, p)
    if inst.precompact:
        return run_case1(inst, steps, thin=thin)
    return run_case2(inst, steps, thin=thin)


@pytest.fixture
def zp2():
    return make_instance("z-in-zp", 2)


@pytest.fixture
def rotation():
    return make_instance("golden-rotation")


@pytest.fixture
def qline():
    return make_instance("q-usual")
