"""Ground states of the averaged dispersion-managed variational problem.

Minimize ``H(f) = dav/2 ||f'||^2 - int int V(|T_r f|) dx dmu(r)`` over
``||f||^2 = lam`` on a periodic spectral grid, where ``T_r`` is the free
Schroedinger propagator and ``mu`` the distribution of accumulated
dispersion. Also provides the threshold scans, Gaussian closed forms and
invariant checks that validate the numerics.
"""
from .errors import (CommensurabilityError, DegenerateError, DMSError, InvalidInputError,
                     ResolutionError, UnboundedBelowError, UndefinedDensityError,
                     UnsupportedError)
from .spectral import (Field, GridSpec, boost, h1_seminorm, inner, l2_norm, lp_norm,
                       propagate, second_derivative, sup_norm, translate)
from .profiles import (DispersionProfile, RMeasure, density_at, model_profile,
                       pushforward_measure, uniform01)
from .nonlinearity import (Potential, evaluate_N, evaluate_N_gaussian_closed_form, grad_N,
                           kerr, pure_power)
from .optimizer import (MinimizeConfig, MinimizeResult, el_residual, evaluate_H, grad_H,
                        lagrange_multiplier, minimize)
from .oracles import (GaussianParams, galilei, gaussian_evolved, gaussian_field,
                      gaussian_lgamma_norm, kato_check, strichartz_ratio)
from .thresholds import (cs_invariance_check, g_alpha, nonexistence_probe, r_value,
                         scaling_check, subadditivity_check, threshold_scan)

__version__ = "0.1.0"
