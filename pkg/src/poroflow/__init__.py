"""Mixed finite elements for fully dynamic, incompressible Biot poroelasticity.

Skeleton displacement uses P1 or P2 nodal triangles, Darcy velocity the
lowest-order Raviart-Thomas space and pressure is elementwise constant. Time
integration is average-acceleration Newmark applied to the constrained
(index-2) system, started from consistent initial conditions and audited by
an energy ledger.
"""

__version__ = "0.1.0"

from .assembly import (  # noqa: E402
    BCSpec,
    FluidBC,
    LoadHistory,
    MaterialParams,
    SkeletonBC,
    SystemMatrices,
    assemble,
)
from .benchmarks import BenchmarkCase, ProbeSpec, block_ex2, bracket_ex3, column_ex1, run  # noqa: E402
from .linsolve import SingularSystemError  # noqa: E402
from .mesh import Mesh, MeshSpec, generate  # noqa: E402
from .stability import infsup_test  # noqa: E402
from .timestepper import (  # noqa: E402
    EnergyLedger,
    NewmarkIntegrator,
    State,
    cfl_timestep,
    integrate,
    terzaghi_settlement,
    wave_speed,
)

__all__ = [
    "BCSpec",
    "BenchmarkCase",
    "EnergyLedger",
    "FluidBC",
    "LoadHistory",
    "MaterialParams",
    "Mesh",
    "MeshSpec",
    "NewmarkIntegrator",
    "ProbeSpec",
    "SingularSystemError",
    "SkeletonBC",
    "State",
    "SystemMatrices",
    "assemble",
    "block_ex2",
    "bracket_ex3",
    "cfl_timestep",
    "column_ex1",
    "generate",
    "infsup_test",
    "integrate",
    "run",
    "terzaghi_settlement",
    "wave_speed",
]
