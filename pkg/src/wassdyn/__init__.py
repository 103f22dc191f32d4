"""wassdyn: particle-based simulation and verification of dissipative
evolutions in the quadratic Wasserstein space."""

from ._kernels import active_backend
from .measures import (DiscreteMeasure, VelocityMeasure, dirac, from_atoms,
                       lambda_transform, negate, push_exp,
                       quantile_discretize_1d, second_moment, shift,
                       uniform_interval, unit_disc, velocity_from_atoms,
                       velocity_norm, x_marginal, zero_velocity_lift)
from .transport import (Coupling, TransportResult, geodesic_point, is_optimal,
                        lexi_transport_lp, w2, w2_1d)
from .pairings import (PairingResult, dini_w2, directional_pairing, pairing_l,
                       pairing_l_nu, pairing_r, pairing_r_nu)
from .fields import (DissipativityReport, MeasureSampler, MpvfSpec,
                     dissipativity_certificate, evaluate, field_norm,
                     weak_dissipativity_certificate)
from .euler import (EulerTrajectory, GlobalBounds, StabilityViolation,
                    euler_run, global_bounds, ievi_check, interpolate)
from .analysis import (CurveSamples, RateFit, analytic_geodesic_flow,
                       analytic_lift, analytic_splitting,
                       barycentric_residual, cauchy_gap_check,
                       contraction_check, error_rate_study, evi_residual)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
