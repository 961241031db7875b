"""Block-resampling penalties and the slope algorithm for density estimation from mixing data."""

from .basis import FOURIER, HAAR, HISTOGRAM, Model, ModelCollection, enumerate_models, eval_basis, make_model, sup_norm_bound
from .blocks import BlockedSample, BlockScheme, block_empirical, block_means, make_blocks
from .estimator import ProjectionFit, RiskReport, evaluate_density, project, risk_against
from .penalty import (
    PenaltyRecord,
    WeightLaw,
    c_tilde_w,
    ideal_penalty,
    iid_law,
    multinomial_law,
    penalty_closed_form,
    penalty_monte_carlo,
)
from .processes import ProcessSpec, TrueDensity, estimate_dam, simulate
from .selection import PenaltyConfig, SelectionReport, run_ppe, select_model
from .slope import NoJumpError, SlopePath, complexity_path, detect_jump, slope_select

__version__ = "0.1.0"
