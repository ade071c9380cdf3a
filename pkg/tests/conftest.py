import numpy as np
import pytest

from lorentz_ot import Minkowski, dynamical_coupling, solve_kantorovich
from lorentz_ot.cli import generate_instance


@pytest.fixture(scope="session")
def mink1():
    return Minkowski(n=1)


@pytest.fixture(scope="session")
def mink2():
    return Minkowski(n=2)


@pytest.fixture(scope="session")
def solved_instance():
    """A mid-size chronological instance with its solve and curve bundle."""
    g, mu0, mu1 = generate_instance(n=6, spatial_dim=1, seed=3)
    coupling, duals, total = solve_kantorovich(g, mu0, mu1)
    pi = dynamical_coupling(g, coupling)
    return {
        "g": g,
        "mu0": mu0,
        "mu1": mu1,
        "coupling": coupling,
        "duals": duals,
        "total": total,
        "pi": pi,
    }


def random_causal_vector(rng, dim, scale=1.0):
    """Strictly timelike future vector with a comfortable cone margin."""
    z = rng.uniform(-1.0, 1.0, dim - 1) * scale
    vt = np.linalg.norm(z) + rng.uniform(0.1, 1.5) * scale
    return np.concatenate([[vt], z])
