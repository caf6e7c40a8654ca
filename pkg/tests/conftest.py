import numpy as np
import pytest

from modules.model_module import Policy, System_Spec, Topology_Spec, per_day

def two_level_spec(lambda1_per_day: float, lambda2_per_day: float, costs=(20.0, 50.0), restarts=None, topology=None) -> System_Spec:
    return System_Spec.from_arrays(
        (per_day(lambda1_per_day), per_day(lambda2_per_day)),
        costs,
        restarts,
        topology=topology,
    )

def fast_hop_stream_spec(n: int) -> System_Spec:
    """Three levels at 432, 43.2 and 8.64 failures per day, half-second token hops."""
    return System_Spec.from_arrays(
        (per_day(432.0), per_day(43.2), per_day(8.64)),
        (5.0, 10.0, 20.0),
        topology=Topology_Spec(n, 0.5),
    )

def three_level_stream_spec(lambda3_per_day: float, n: int) -> System_Spec:
    return System_Spec.from_arrays(
        (per_day(20.0), per_day(5.0), per_day(lambda3_per_day)),
        (10.0, 20.0, 100.0),
        topology=Topology_Spec(n, 0.5),
    )

def random_two_level(rng: np.random.Generator, max_exposure: float = 0.2, min_p2: float = 0.2, topology: bool = False):
    """A random feasible two-level (spec, policy) pair with Lambda*T <= max_exposure."""
    lambda1 = per_day(rng.uniform(1.0, 100.0))
    lambda2 = lambda1 * rng.uniform(0.01, 0.9)
    c1 = rng.uniform(1.0, 20.0)
    c2 = c1 + rng.uniform(1.0, 40.0)
    r1 = rng.uniform(0.0, c1)
    r2 = r1 + rng.uniform(0.0, 60.0)
    total = lambda1 + lambda2
    interval = rng.uniform(c2 + 1.0, max(c2 + 2.0, max_exposure / total))
    p2 = rng.uniform(min_p2, 1.0)
    topology_spec = Topology_Spec(int(rng.integers(1, 60)), rng.uniform(0.0, 1.0)) if topology else None
    spec = System_Spec.from_arrays((lambda1, lambda2), (c1, c2), (r1, r2), topology=topology_spec)
    return spec, Policy(interval, (1.0 - p2, p2))

@pytest.fixture
def reference_spec() -> System_Spec:
    return two_level_spec(50.0, 0.5)

@pytest.fixture
def reference_policy() -> Policy:
    return Policy.two_level(268.0672, 0.8897)
