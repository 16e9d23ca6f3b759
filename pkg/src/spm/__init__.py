"""Subspace power method for symmetric tensor decompositions.

Decomposes even-order real symmetric tensors into weighted unit rank-1 terms
(CP) or symmetric Tucker blocks (block term decomposition) by extracting the
column space of the square flattening, running a shifted power iteration on
it, and deflating found components with Householder updates.  A
method-of-moments generalized PCA pipeline sits on top of the block term
decomposition.
"""

from .driver import SpmConfig, decompose, decompose_btd, local_component
from .deflate import (deflate_btd, deflate_cp, deflate_naive, solve_lambda,
                      solve_block_lambda)
from .errors import (DecompositionError, DegenerateDeflationError, FormatError,
                     InconsistentRankError, LocalComponentError,
                     MembershipError, NumericalError, SpmError)
from .gpca import (SubspaceArrangement, classify, debias_moments,
                   estimate_sigma, fit_subspaces, misclassification_error,
                   sample_moment, subspace_error)
from .power import (PowerConfig, PowerResult, ShiftParams, adaptive_step,
                    power_step, run_power, shift_gamma)
from .spectral import (RankPolicy, SubspaceState, extract_subspace,
                       membership_residual, project_pull)
from .tensors import (Block, BlockTermDecomposition, CPDecomposition,
                      btd_reconstruct, contract, core_to_matrix,
                      cp_reconstruct, flatten_mat, khatri_rao_power,
                      kron_power, matrix_to_core, star_power, symmetrize,
                      tensor_power, tucker_apply, unvectorize, vectorize)

__version__ = "0.1.0"
