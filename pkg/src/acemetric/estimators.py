"""scikit-learn style wrappers.

``TvL1OpticalFlow`` learns the flow between a reference and a moving field
and can then warp fields onto the reference grid. ``AceScorer`` fits on an
(observation, truth) pair once and scores any number of predictions against
it, reusing the truth flow.
"""
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import as_values, check_grid, check_same_shape
from .core import EvalCase, FlowField2D, ScalarField2D, normalize_case
from .metrics import AceConfig, MetricReport, evaluate_normalized
from .tvl1 import TvL1Config, extract_flow_arrays
from .warp import remap_array


def _check_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


class _SolverParams:
    """Mixin turning the estimator's flat solver parameters into a config."""

    def _tvl1_config(self):
        return TvL1Config(
            tau=self.tau, lambda_=self.lambda_, theta=self.theta, nscales=self.nscales,
            warps=self.warps, epsilon=self.epsilon, inner_iterations=self.inner_iterations,
            outer_iterations=self.outer_iterations, scale_step=self.scale_step,
            median_filter_size=self.median_filter_size, intensity_scale=self.intensity_scale)


class TvL1OpticalFlow(_SolverParams, TransformerMixin, BaseEstimator):
    """Coarse-to-fine TV-L1 flow with a fit/transform interface.

    ``fit(X, y)`` estimates the flow that carries the moving field ``y``
    back onto the reference ``X`` and stores it as ``flow_``.
    ``transform(Z)`` warps ``Z`` along that flow.
    """

    def __init__(self, tau=0.25, lambda_=0.15, theta=0.3, nscales=5, warps=5, epsilon=0.01,
                 inner_iterations=30, outer_iterations=10, scale_step=0.8,
                 median_filter_size=5, intensity_scale=255.0):
        self.tau = tau
        self.lambda_ = lambda_
        self.theta = theta
        self.nscales = nscales
        self.warps = warps
        self.epsilon = epsilon
        self.inner_iterations = inner_iterations
        self.outer_iterations = outer_iterations
        self.scale_step = scale_step
        self.median_filter_size = median_filter_size
        self.intensity_scale = intensity_scale

    def fit(self, X, y):
        ref = check_grid(as_values(X), "X")
        moving = check_grid(as_values(y), "y")
        check_same_shape(("X", ref), ("y", moving))
        vx, vy = extract_flow_arrays(ref, moving, self._tvl1_config())
        self.flow_ = FlowField2D(vx, vy)
        self.shape_ = ref.shape
        return self

    def transform(self, X):
        _check_fitted(self, "flow_")
        values = check_grid(as_values(X), "X")
        check_same_shape(("X", values), ("flow", self.flow_.vx))
        return remap_array(values, self.flow_.vx, self.flow_.vy)

    def fit_transform(self, X, y=None, **fit_params):
        # aligning the moving field is the useful output, not X itself
        return self.fit(X, y).transform(y)


class AceScorer(_SolverParams, BaseEstimator):
    """Score predictions of one truth field given the observation.

    ``fit(X, y)`` takes the observation ``X`` and truth ``y``.
    ``evaluate(pred)`` returns a full :class:`MetricReport`;
    ``score(pred)`` returns ``-ace`` so that larger is better.
    """

    def __init__(self, ace_epsilon=1e-6, emit_maps=False, data_range=1.0, tau=0.25,
                 lambda_=0.15, theta=0.3, nscales=5, warps=5, epsilon=0.01,
                 inner_iterations=30, outer_iterations=10, scale_step=0.8,
                 median_filter_size=5, intensity_scale=255.0):
        self.ace_epsilon = ace_epsilon
        self.emit_maps = emit_maps
        self.data_range = data_range
        self.tau = tau
        self.lambda_ = lambda_
        self.theta = theta
        self.nscales = nscales
        self.warps = warps
        self.epsilon = epsilon
        self.inner_iterations = inner_iterations
        self.outer_iterations = outer_iterations
        self.scale_step = scale_step
        self.median_filter_size = median_filter_size
        self.intensity_scale = intensity_scale

    def get_config(self) -> AceConfig:
        return AceConfig(tvl1=self._tvl1_config(), ace_epsilon=self.ace_epsilon,
                         emit_maps=self.emit_maps, data_range=self.data_range)

    def fit(self, X, y):
        obs = ScalarField2D(as_values(X))
        truth = ScalarField2D(as_values(y))
        case, transform = normalize_case(EvalCase(obs, truth, truth, "fit"))
        self.config_ = self.get_config()
        self.normalization_ = transform
        self.observation_ = case.observation
        self.truth_ = case.truth
        vx, vy = extract_flow_arrays(case.observation.values, case.truth.values,
                                     self.config_.tvl1)
        self.flow_truth_ = FlowField2D(vx, vy)
        return self

    def evaluate(self, prediction, case_id="case") -> MetricReport:
        _check_fitted(self, "flow_truth_")
        pred = ScalarField2D(self.normalization_.apply(as_values(prediction)))
        case = EvalCase(self.observation_, self.truth_, pred, case_id)
        return evaluate_normalized(case, self.config_, flow_truth=self.flow_truth_,
                                   normalization=self.normalization_)

    def score(self, X, y=None):
        return -self.evaluate(X).ace
