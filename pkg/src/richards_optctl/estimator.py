"""scikit-learn style facade over the PGD optimiser.

The "training data" of this estimator is a scenario, not a feature matrix:
``fit`` optimises the irrigation control of that scenario, ``predict``
maps a control to its water-content field and ``score`` returns the
negative reduced cost so that higher is better.
"""
from __future__ import annotations

from dataclasses import replace

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .optim import pgd
from .validation import check_control, check_positive, check_scenario


class IrrigationOptimizer(BaseEstimator):
    """Optimal top-boundary water content by projected gradient descent.

    Parameters
    ----------
    lam : float
        Control penalty weight.
    tol : float
        Stop when the cost change of a candidate step is below this.
    maxit : int
        Iteration cap.
    epsilon : float
        Diffusivity truncation margin, also the projection margin.
    adjoint_scheme : {"discrete", "continuous"}

    Attributes
    ----------
    control_, state_, adjoint_, cost_history_, n_iter_, exit_reason_
    """

    def __init__(self, lam=0.1, tol=1e-5, maxit=100, epsilon=1e-3, adjoint_scheme="discrete"):
        self.lam = lam
        self.tol = tol
        self.maxit = maxit
        self.epsilon = epsilon
        self.adjoint_scheme = adjoint_scheme

    def _configured(self, scenario):
        scenario = check_scenario(scenario)
        check_positive("lam", self.lam)
        check_positive("tol", self.tol)
        check_positive("epsilon", self.epsilon)
        pgd_cfg = replace(scenario.pgd, lam=float(self.lam), tol=float(self.tol),
                          maxit=int(self.maxit), epsilon=float(self.epsilon),
                          adjoint_scheme=self.adjoint_scheme)
        return replace(scenario, pgd=pgd_cfg).validate()

    def fit(self, scenario, y=None):
        sc = self._configured(scenario)
        report = pgd(sc)
        self.scenario_ = sc
        self.problem_ = sc.to_problem()
        self.control_ = report.final_control
        self.state_ = report.final_state
        self.adjoint_ = report.final_adjoint
        self.cost_history_ = list(report.cost_history)
        self.n_iter_ = report.iterations
        self.exit_reason_ = report.exit_reason
        return self

    def predict(self, control=None):
        """Water content ``(Nz, Nt)`` under ``control`` (default: the fitted one)."""
        check_is_fitted(self, "control_")
        if control is None:
            return self.state_.values
        u = check_control(control, self.problem_.grid, self.problem_.aset)
        return self.problem_.forward(u).values

    def score(self, control=None, y=None):
        """Negative reduced cost of ``control`` (default: the fitted one)."""
        check_is_fitted(self, "control_")
        u = self.control_ if control is None else check_control(control, self.problem_.grid,
                                                                 self.problem_.aset)
        return -self.problem_.reduced_cost(u)
