"""Full-duplex self-interference cancellation workbench."""

__version__ = "0.1.0"

from .activations import Activation
from .complexity import ComplexityReport, complexity_report, count_flops, count_params
from .harness import (
    HyperParamSpace, SweepConfig, SweepReport, final_eval, hyperparam_search,
    paper_grid_specs, run_sweep,
)
from .network import Field, LayerSpec, NetKind, NetSpec,forward, init_params, make_net_spec
from .polynomial import (
    LinearCanceller, PolyModel, basis_functions, build_regressor_row, fit_linear,
    fit_poly, ls_fit, n_basis_functions, nonlinear_target, poly_predict,
)
from .signals import (
    ComplexSignal, Dataset, ImpairmentConfig, OfdmConfig, apply_si_channel,
    apply_tx_impairments, cancellation_db, generate_ofdm_frame, load_dataset,
    save_dataset, synthesize_dataset,
)
from .specs import CancellerSpec, parse_spec
from .training import (
    TrainConfig, TrainedCanceller, evaluate, load_trained, nonlinear_cancellation_db,
    save_trained, train,
)
