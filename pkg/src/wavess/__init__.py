"""wavess: spike-and-slab tensor-product wavelet posteriors for
multivariate nonparametric regression on [0,1]^d."""

from .basis import (
    Basis,
    BasisSpec,
    TensorIndex,
    build_basis,
    eval_1d,
    eval_tensor,
    index_range,
    inner_product_1d,
    inner_product_tensor,
)
from .funcspace import (
    AnisoSmoothness,
    BesovBallSpec,
    CoefficientField,
    besov_norm,
    eval_field,
    harmonic_mean,
    in_adaptation_region,
    project,
    rate_eps,
    rate_eps_r,
    sample_truth,
)
from .design import (
    Design,
    RegressionDataset,
    cdf_discrepancy,
    gen_data,
    make_grid_design,
    make_midpoint_grid,
    riemann_gap,
    sample_uniform_design,
)
from .gram import (
    DesignMatrices,
    build_matrices,
    column_abs_sum,
    gram_block,
    gram_deviation_report,
    gram_eigen_range,
)
from .posterior import (
    ChainDraws,
    GibbsConfig,
    PriorConfig,
    default_truncation,
    event_diagnostics,
    exact_posterior_small,
    posterior_mean_field,
    quasi_wn_posterior,
    run_chain,
    weight,
)
from .bench import (
    TestConfig,
    adversarial_alternative,
    lr_test,
    plugin_test,
    type2_experiment,
)
from .cli import ExperimentSpec, child_seed, load_spec, main, parallel_map

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "BasisSpec",
    "TensorIndex",
    "build_basis",
    "eval_1d",
    "eval_tensor",
    "index_range",
    "inner_product_1d",
    "inner_product_tensor",
    "AnisoSmoothness",
    "BesovBallSpec",
    "CoefficientField",
    "besov_norm",
    "eval_field",
    "harmonic_mean",
    "in_adaptation_region",
    "project",
    "rate_eps",
    "rate_eps_r",
    "sample_truth",
    "Design",
    "RegressionDataset",
    "cdf_discrepancy",
    "gen_data",
    "make_grid_design",
    "make_midpoint_grid",
    "riemann_gap",
    "sample_uniform_design",
    "DesignMatrices",
    "build_matrices",
    "column_abs_sum",
    "gram_block",
    "gram_deviation_report",
    "gram_eigen_range",
    "ChainDraws",
    "GibbsConfig",
    "PriorConfig",
    "default_truncation",
    "event_diagnostics",
    "exact_posterior_small",
    "posterior_mean_field",
    "quasi_wn_posterior",
    "run_chain",
    "weight",
    "TestConfig",
    "adversarial_alternative",
    "lr_test",
    "plugin_test",
    "type2_experiment",
    "ExperimentSpec",
    "child_seed",
    "load_spec",
    "main",
    "parallel_map",
    "__version__",
]
