"""Continuous-time dynamic mode decomposition with occupation kernels.

Trajectories of an unknown system ``dx/dt = f(x)`` are turned into
occupation kernels in a reproducing kernel Hilbert space.  The Liouville
operator (optionally endpoint-scaled) is represented on their span, and its
eigen-decomposition yields continuous-time eigenvalues, eigenfunctions,
Liouville modes, reconstructions and spectra.

Typical use::

    from liouville_dmd import KernelSpec, fit, reconstruct, synthesize, segment_all

    trajs = segment_all(synthesize("oscillator", 10, T=1.0, dt=0.005), 40)
    model = fit(trajs, KernelSpec.gaussian(5.0))
    path, imag = reconstruct(model, [1.0, 0.0], np.linspace(0, 1, 101))
"""

__version__ = "0.1.0"

from .decomposition import (DecompositionModel, ModesTranspose, Ordering, Prediction,
                            eigendecompose, eigenfunctions_at, finite_rank_representation, fit,
                            hausdorff, liouville_modes, mode_energies, predict, reconstruct,
                            spectrum)
from .errors import (DataError, DegenerateEigenbasisError, DegenerateEigenvectorError,
                     DivergenceError, InvalidInputError, LiouvilleDMDError, NumericError,
                     NumericRangeError, ParseError, SingularGramError, StaleModelError)
from .kernels import KernelKind, KernelSpec, eval_kernel, eval_matrix
from .occupation import (GramData, assemble, gram_matrix, interaction_matrix, occupation_eval,
                         occupation_values, projection_errors, state_integrals)
from .persistence import DataSource, load_model, save_model
from .quadrature import QuadratureWeights, Rule, RuleUsed, integrate, weights
from .synthetic import synthesize
from .trajectory import (Layout, Trajectory, VectorFieldSpec, load_trajectories, save_trajectories,
                         save_trajectory, segment, segment_all, simulate)
