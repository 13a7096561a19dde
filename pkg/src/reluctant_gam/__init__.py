"""Sparse additive modelling with reluctantly added non-linear terms.

The fitting pipeline works in three steps: a cross-validated lasso on the
raw features, a degrees-of-freedom-calibrated smoothing spline of the
residual on each candidate feature, and a joint lasso over the original
features plus the rescaled spline columns. Non-linear terms therefore
enter only where the linear fit leaves structure behind.

The package also provides the building blocks on their own: penalized
GLM lasso paths, smoothing splines with an exact effective-df
calibration, k-fold cross-validation, Monte Carlo degrees of freedom, and
a synthetic benchmark harness. The ``rgam`` console script exposes the
same operations on CSV files.
"""

from .cv import (
    CvResult,
    LassoFitter,
    auc,
    binomial_deviance,
    cross_validate,
    fit_cv,
    make_folds,
    mean_deviance,
    mean_squared_error,
)
from .data import (
    Dataset,
    Standardization,
    load_csv,
    load_matrix_csv,
    population_sd,
    sample_sd,
    standardize,
    write_csv,
    write_dataset_csv,
)
from .dof import (
    DofConfig,
    DofEstimate,
    estimate_df,
    fit_grand_mean,
    fit_identity,
    fit_ols,
    make_rgam_dof_fitter,
    make_smoother_fitter,
)
from .errors import DataError, RgamError, SolverError, UsageError
from .families import BINOMIAL, FAMILIES, GAUSSIAN, POISSON, Family, resolve_family
from .lasso import (
    FittedLinearModel,
    LambdaPath,
    default_lambda_path,
    fit_lasso_path,
    make_lambda_path,
    predict_linear,
    predict_linear_all,
)
from .pipeline import (
    RgamConfig,
    RgamFitter,
    RgamModel,
    SplineFeature,
    compute_residual,
    fit_rgam,
    fit_rgam_unpenalized,
    load_rgam,
    model_from_dict,
    model_to_dict,
    predict_rgam,
    predict_rgam_all,
    save_rgam,
    select_nonlinear_candidates,
)
from .simbench import (
    SCENARIOS,
    GeneratedScenario,
    ScenarioSpec,
    SimResult,
    evaluate_fit,
    generate_scenario,
    make_spec,
    run_benchmark,
    summarize_results,
)
from .spline import (
    SmoothingSplineFit,
    evaluate_spline,
    fit_smoothing_spline,
    solve_df_to_lambda,
)

__version__ = "0.1.0"

__all__ = [
    "BINOMIAL",
    "CvResult",
    "DataError",
    "Dataset",
    "DofConfig",
    "DofEstimate",
    "FAMILIES",
    "Family",
    "FittedLinearModel",
    "GAUSSIAN",
    "GeneratedScenario",
    "LambdaPath",
    "LassoFitter",
    "POISSON",
    "RgamConfig",
    "RgamError",
    "RgamFitter",
    "RgamModel",
    "SCENARIOS",
    "ScenarioSpec",
    "SimResult",
    "SmoothingSplineFit",
    "SolverError",
    "SplineFeature",
    "Standardization",
    "UsageError",
    "auc",
    "binomial_deviance",
    "compute_residual",
    "cross_validate",
    "default_lambda_path",
    "estimate_df",
    "evaluate_fit",
    "evaluate_spline",
    "fit_cv",
    "fit_grand_mean",
    "fit_identity",
    "fit_lasso_path",
    "fit_ols",
    "fit_rgam",
    "fit_rgam_unpenalized",
    "fit_smoothing_spline",
    "generate_scenario",
    "load_csv",
    "load_matrix_csv",
    "load_rgam",
    "make_folds",
    "make_lambda_path",
    "make_rgam_dof_fitter",
    "make_smoother_fitter",
    "make_spec",
    "mean_deviance",
    "mean_squared_error",
    "model_from_dict",
    "model_to_dict",
    "population_sd",
    "predict_linear",
    "predict_linear_all",
    "predict_rgam",
    "predict_rgam_all",
    "resolve_family",
    "run_benchmark",
    "sample_sd",
    "save_rgam",
    "select_nonlinear_candidates",
    "solve_df_to_lambda",
    "standardize",
    "summarize_results",
    "write_csv",
    "write_dataset_csv",
]
