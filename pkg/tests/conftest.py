import numpy as np
import pytest
from hypothesis import settings

from fracks.fields import FieldSnapshot, SpatialGrid, TwoLevelBasis, build_snapshot
from fracks.lindblad import TABLE1_INITIAL, TwoLevelDensity

settings.register_profile("fracks", deadline=None, max_examples=60)
settings.load_profile("fracks")


@pytest.fixture(scope="session")
def grid():
    return SpatialGrid()


@pytest.fixture(scope="session")
def basis(grid):
    return TwoLevelBasis(grid)


@pytest.fixture(scope="session")
def ground_snapshot(basis):
    rho = TwoLevelDensity.from_populations(1.0, 0.0)
    return build_snapshot(rho, basis.dephasing_params(0.15), basis, 0.0)


@pytest.fixture(scope="session")
def table1_snapshot(basis):
    return build_snapshot(TABLE1_INITIAL, basis.dephasing_params(0.15), basis, np.pi / 4)


def synthetic_snapshot(grid, n, theta=None, dn_dx=None, dtheta_dx=None, dtheta_dt=None, t=0.0):
    """Snapshot with hand-made fields; unspecified ones are zero."""
    zeros = np.zeros(grid.n_points)
    as_field = lambda v: zeros + (0.0 if v is None else v)  # noqa: E731
    return FieldSnapshot(
        t=t,
        grid=grid,
        rho=TwoLevelDensity.from_populations(1.0, 0.0),
        n=as_field(n),
        dn_dx=as_field(dn_dx),
        d2n_dx2=zeros.copy(),
        dn_dt=zeros.copy(),
        theta=as_field(theta),
        dtheta_dx=as_field(dtheta_dx),
        dtheta_dt=as_field(dtheta_dt),
    )
