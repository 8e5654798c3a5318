"""windlift: discontinuity-aware neural displacement bases on winding graphs,
with reduced-order simulation of progressively cut elastic sheets."""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend  # noqa: F401
from .domain import CubatureSet, Domain  # noqa: F401
from .elasticity import Material  # noqa: F401
from .geometry import (  # noqa: F401
    CutCurve,
    Point2,
    WindingField,
    tip_smooth_factor,
    truncate_curve,
    winding_gradient,
    winding_number,
)
from .lifting import (  # noqa: F401
    lift_points,
    restricted_basis,
    restricted_basis_jacobian,
)
from .neural import (  # noqa: F401
    NeuralBasis,
    init_basis,
    load_checkpoint,
    param_checksum,
    save_checkpoint,
)
from .scenefile import load_scene, load_scene_dict, validate_scene_dict  # noqa: F401
from .service import SimulationSession, serve  # noqa: F401
from .sim import (  # noqa: F401
    PokeForce,
    Scene,
    SimParams,
    Simulator,
    SolverError,
    load_trajectory,
    run_trajectory,
    save_trajectory,
)
from .training import (  # noqa: F401
    SnapshotDataset,
    TrainConfig,
    reconstruction_error,
    train_data_driven,
    train_data_free,
)
