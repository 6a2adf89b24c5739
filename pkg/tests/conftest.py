import numpy as np
import pytest

from efiefilt.assembly import assemble_operators
from efiefilt.loopstar import build_maps
from efiefilt.mesh import generate_icosphere
from efiefilt.rwg import PhysicsParams, PlaneWave, RwgSpace

XPOL_WAVE = PlaneWave(direction=[0.0, 0.0, 1.0], polarization=[1.0, 0.0, 0.0])


@pytest.fixture(scope="session")
def icosahedron():
    return generate_icosphere(0, 1.0)


@pytest.fixture(scope="session")
def icosphere1():
    return generate_icosphere(1, 1.0)


@pytest.fixture(scope="session")
def icosphere2():
    return generate_icosphere(2, 1.0)


@pytest.fixture(scope="session")
def assembly_cache():
    """Session-wide cache of assembled operator sets keyed by (subdiv, freq)."""
    cache = {}

    def get(subdiv, params, wave=XPOL_WAVE, quad=None):
        from efiefilt.quadrature import QuadratureConfig

        quad = quad or QuadratureConfig()
        key = (subdiv, params.frequency, quad.order, quad.near_ratio,
               None if wave is None else (tuple(wave.direction),
                                          tuple(wave.polarization),
                                          wave.amplitude))
        if key not in cache:
            mesh = generate_icosphere(subdiv, 1.0)
            space = RwgSpace.from_mesh(mesh)
            ops = assemble_operators(space, params, quad, wave=wave)
            cache[key] = (mesh, space, ops)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def ico1_ka1(assembly_cache):
    return assembly_cache(1, PhysicsParams.for_ka(1.0, 1.0))


@pytest.fixture(scope="session")
def ico2_ka1(assembly_cache):
    return assembly_cache(2, PhysicsParams.for_ka(1.0, 1.0))


@pytest.fixture(scope="session")
def maps_cache():
    cache = {}

    def get(mesh):
        key = id(mesh)
        if key not in cache:
            cache[key] = build_maps(mesh)
        return cache[key]

    return get


def rng(seed=0):
    return np.random.default_rng(seed)
