"""Multi-scale anisotropic fourth-order diffusion for ridge and valley enhancement."""

from .grid import (Gradient, Hessian, NumericalError, ParameterError, gaussian_smooth,
                   gradient, hessian, hessian_adjoint)
from .scale_select import (ScaleConfig, VesselnessResult, frangi_vesselness, hessian_eigen,
                           normalized_hessian, postprocess_scale_map, select_scales)
from .tensor import DiffusivityConfig, build_tensor, double_contract, tensor_field
from .solver import (FedSchedule, L2Stopper, MafodParams, assemble_flux, explicit_step,
                     fed_substeps, fed_taus, kappa_reorder, run_mafod, stability_bound)
from .baselines import (RidgeStrengthConfig, bilateral, demo_1d, ifod_step,
                        multiscale_gaussian, pm_second_order_step)
from .curves import CurveSet, Polyline
from .creases import crease_field, extract_creases, marching_squares
from .evaluate import EvalConfig, EvalResult, hausdorff, l2_distance, match_and_score, snr
from .synthgen import (SyntheticSpec, add_noise, gen_concentric, gen_occluded_vessel,
                       gen_trapezoid_1d)

__version__ = "0.1.0"
