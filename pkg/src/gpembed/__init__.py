"""Heat-kernel embeddings of finite point sets.

Diffusion maps and Gaussian-process (sketched heat kernel) embeddings, with
the tooling to compare them by biLipschitz distortion on synthetic manifolds.
"""
from .embed import (
    METHODS,
    Embedding,
    SketchMatrix,
    diffusion_maps,
    gp_embedding,
    gp_power_series,
    make_sketch,
)
from .errors import (
    ConvergenceError,
    DecompositionError,
    DegenerateError,
    GPEmbedError,
    InputError,
    ParameterError,
    SpecError,
    SpectralError,
    TrialError,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    derive_seed,
    powers_of_two,
    run_experiment,
    run_power_sweep,
)
from .kernel import (
    KernelMatrix,
    PointCloud,
    affinity,
    normalize_bistochastic,
    normalize_symmetric,
    normalized_kernel,
)
from .manifolds import ManifoldSpec, sample
from .metric import (
    DistanceMatrix,
    bilipschitz_distortion,
    diffusion_distance,
    log_distortion,
    pairwise_euclidean,
)
from .spectral import SpectralDecomposition, matrix_power_apply, top_eigenpairs

__version__ = "0.1.0"
