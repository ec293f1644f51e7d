"""Near-field XL-MIMO channel estimation via sparse recovery.

Simulates spherical-wave uplink channels for large uniform linear arrays,
poses channel estimation as sparse recovery over a polar (angle x inverse
distance) grid, and solves it with classical iterative solvers and
learned unfolded networks trained by hand-rolled complex backprop.
"""

from .channel import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    DegenerateGeometry,
    PathParam,
    PathSet,
    ScenarioPrior,
    exact_channel,
    fresnel_atom,
    fresnel_channel,
    rayleigh_distance,
    sample_scenario,
)
from .config import ConfigError, ExperimentConfig, load_config, preset, save_config
from .dictionary import (
    Dictionary,
    GridSpec,
    InvalidAngle,
    SparseCode,
    ZeroColumn,
    build_spatial_dictionary,
    coherence_report,
    load_dictionary,
    mutual_coherence,
    quantize_paths,
    save_dictionary,
    steering_vector,
)
from .estimators import (
    FistaChannelEstimator,
    IstaChannelEstimator,
    ListaChannelEstimator,
    OmpChannelEstimator,
    SdlListaChannelEstimator,
)
from .evaluation import (
    BenchmarkSpec,
    ResultTable,
    convergence_sweep,
    mean_nmse_db,
    nmse,
    nmse_db,
    run_benchmark,
)
from .measurement import (
    CombinerMatrix,
    Dataset,
    Observation,
    ZeroSignal,
    identity_combiner,
    load_dataset,
    make_dataset,
    observe,
    sample_combiner,
    save_dataset,
    sigma_for_snr,
)
from .numerics import (
    DimensionMismatch,
    NonConvergence,
    Rng,
    hermitian,
    inner_product,
    matmul,
    matvec,
    max_eigenvalue,
    vecnorm2,
)
from .solvers import (
    SensingOperator,
    SingularRefit,
    SolverConfig,
    fista,
    ista,
    lasso_objective,
    omp,
    reconstruct_channel,
    soft_threshold,
)
from .unfolded import (
    AdamState,
    GradientTape,
    ListaParams,
    MissingCheckpoint,
    SdlListaParams,
    TrainConfig,
    TrainResult,
    adam_step,
    dft_frame,
    init_lista_params,
    init_model_params,
    init_sdl_params,
    ista_initialized_lista,
    lista_backward,
    lista_forward,
    lista_predict,
    load_checkpoint,
    save_checkpoint,
    sdl_backward,
    sdl_forward,
    sdl_predict,
    train,
    train_model,
    unsquared_loss,
)

__version__ = "0.1.0"
