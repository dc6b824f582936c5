"""Two-level atom in a lossy two-mode cavity: full master equation versus the
beam-splitter reduction to a dissipative one-mode JCM plus a damped oscillator."""
from .beamsplitter import (
    FrameTransform,
    build_transform,
    check_factorization,
    conjugate_operator,
    from_transformed_frame,
    to_transformed_frame,
)
from .evolution import (
    ComparisonReport,
    DensityState,
    FactorizationRefused,
    TimeGrid,
    Trajectory,
    compare_routes,
    integrate_full,
    integrate_reduced,
    reconstruct,
)
from .model import SystemParams, build_hamiltonian, dissipator, effective_coupling, liouville_rhs, mixing_angle
from .observables import expect_full, expect_reduced, registry, transform_decompose

__version__ = "0.1.0"
