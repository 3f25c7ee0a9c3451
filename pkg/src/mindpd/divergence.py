"""Density power divergence, M-estimation criterion, and its derivatives.

This module is the only place that branches on alpha = 0: the criterion
becomes the log-density (so the estimator reduces to maximum likelihood),
its gradient the score, its Hessian the negative information matrix, and the
divergence takes its Kullback-Leibler limit form. Everywhere else alpha = 0
flows through the generic formulas unchanged.

The theta-dependent model integrals entering the criterion and its
derivatives are independent of the data; within one evaluation they are
computed once and memoized in a per-call cache (never shared across calls).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .families import (INFO_POWER, PLAIN_POWER, SCORE_OUTER_POWER,
                       SCORE_POWER, Mixture, integral_term, integrate_model)
from .quadrature import QuadratureSpec


@dataclass(frozen=True)
class DpdConfig:
    """Tuning constant and quadrature settings.

    alpha = 0 selects the KL-limit (maximum likelihood) path everywhere;
    no division by alpha ever occurs on that path.
    """

    alpha: float
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        if not self.alpha >= 0:
            raise DomainError("alpha must be nonnegative")


@dataclass(frozen=True, eq=False)
class Sample:
    """Validated observation vector."""

    data: np.ndarray

    @classmethod
    def from_values(cls, fam, values):
        return cls(fam.validate_data(values))

    @property
    def n(self):
        return self.data.shape[0]


def sample_data(fam, sample):
    """Accept a Sample or raw values; always returns validated data."""
    if isinstance(sample, Sample):
        return sample.data
    return fam.validate_data(np.asarray(sample, dtype=float))


def as_mixture(g):
    """Normalize a true-density argument: Mixture or (family, theta)."""
    if isinstance(g, Mixture):
        return g
    fam, theta = g
    return Mixture.single(fam, theta)


def model_term(fam, theta, cfg, kind, cache=None):
    """integral_term memoized in the per-evaluation cache."""
    if cache is None:
        return integral_term(fam, theta, cfg.alpha, kind, cfg.quad)
    key = (kind, cfg.alpha, np.asarray(theta, dtype=float).tobytes())
    if key not in cache:
        cache[key] = integral_term(fam, theta, cfg.alpha, kind, cfg.quad)
    return cache[key]


# ----------------------------------------------------------------------
# divergence
# ----------------------------------------------------------------------

def dpd_divergence(g, fam, theta, cfg):
    """Density power divergence between a true density g (mixture or
    (family, theta)) and the model density f(.; theta).

    alpha = 0 returns the Kullback-Leibler form; alpha = 1 equals the
    squared L2 distance between the densities.
    """
    g = as_mixture(g)
    fam.require_feasible(theta)
    if g.support != fam.support:
        raise DomainError(
            "true density and model family have incompatible supports")
    alpha = cfg.alpha
    windows = [g.window(cfg.quad.tail_eps),
               fam.window(theta, cfg.quad.tail_eps)]
    hints = g.panel_hints(cfg.quad.tail_eps) \
        + fam.panel_hints(theta, cfg.quad.tail_eps)

    if alpha == 0.0:
        def integrand(x):
            gv = g.pdf(x)
            lf = fam.logpdf(x, theta)
            out = np.zeros_like(gv)
            pos = gv > 0
            out[pos] = gv[pos] * (np.log(gv[pos]) - lf[pos])
            return out
    else:
        def integrand(x):
            gv = g.pdf(x)
            lf = fam.logpdf(x, theta)
            fa = np.exp(alpha * lf)
            f1a = np.exp((1 + alpha) * lf)
            # (g/alpha)(g^alpha - f^alpha) written via expm1 so the
            # alpha -> 0 limit is reached without cancellation
            out = f1a - gv * fa
            pos = gv > 0
            lg = np.log(gv[pos])
            out[pos] += (gv[pos] * fa[pos]
                         * np.expm1(alpha * (lg - lf[pos])) / alpha)
            return out

    value, _ = integrate_model(fam.support, integrand, windows, cfg.quad,
                               hints=hints)
    value = float(value)
    if value < 0:
        # quadrature noise around the g = f minimum
        value = max(value, 0.0) if value > -1e-10 else value
    return value


# ----------------------------------------------------------------------
# criterion and empirical objective
# ----------------------------------------------------------------------

def criterion(fam, x, theta, cfg, cache=None):
    """Per-observation criterion m(x, theta).

    For alpha > 0 this is (1 + 1/alpha) f^alpha(x) minus the model integral
    of f^(1+alpha) (computed once per theta); for alpha = 0 it is
    log f(x; theta).
    """
    if cfg.alpha == 0.0:
        return fam.logpdf(x, theta)
    fa = np.exp(cfg.alpha * fam.logpdf(x, theta))
    const = model_term(fam, theta, cfg, PLAIN_POWER, cache)
    return (1 + 1 / cfg.alpha) * fa - const


def objective(fam, sample, theta, cfg):
    """Empirical objective: the sample average of the criterion."""
    data = sample_data(fam, sample)
    return float(np.mean(criterion(fam, data, theta, cfg, cache={})))


def minimizing_objective(fam, sample, theta, cfg):
    """The minimization form of the fitting problem: the model integral of
    f^(1+alpha) minus (1 + 1/alpha) times the mean of f^alpha over the data.
    Equal to -objective for alpha > 0; kept as an internal cross-check."""
    if cfg.alpha == 0.0:
        return -objective(fam, sample, theta, cfg)
    data = sample_data(fam, sample)
    const = model_term(fam, theta, cfg, PLAIN_POWER, cache=None)
    fa = np.exp(cfg.alpha * fam.logpdf(data, theta))
    return float(const - (1 + 1 / cfg.alpha) * np.mean(fa))


def criterion_gradient(fam, x, theta, cfg, cache=None):
    """Per-observation criterion gradients, shape (n, p): the score for
    alpha = 0, otherwise (1+alpha)(S f^alpha - model score-power term)."""
    s = fam.score(x, theta)
    if cfg.alpha == 0.0:
        return s
    fa = np.exp(cfg.alpha * fam.logpdf(x, theta))
    t = model_term(fam, theta, cfg, SCORE_POWER, cache)
    return (1 + cfg.alpha) * (s * fa[:, None] - t[None, :])


def objective_gradient(fam, sample, theta, cfg):
    """Gradient of the empirical objective in natural coordinates."""
    data = sample_data(fam, sample)
    return np.mean(criterion_gradient(fam, data, theta, cfg, {}), axis=0)


def objective_hessian(fam, sample, theta, cfg):
    """Hessian of the empirical objective in natural coordinates."""
    data = sample_data(fam, sample)
    info = fam.info(data, theta)
    if cfg.alpha == 0.0:
        h = -np.mean(info, axis=0)
        return 0.5 * (h + h.T)
    alpha = cfg.alpha
    cache = {}
    s = fam.score(data, theta)
    fa = np.exp(alpha * fam.logpdf(data, theta))
    outer = np.einsum("ni,nj->nij", s, s)
    point = (-info + alpha * outer) * fa[:, None, None]
    bracket = ((1 + alpha) * model_term(fam, theta, cfg, SCORE_OUTER_POWER, cache)
               - model_term(fam, theta, cfg, INFO_POWER, cache))
    h = (1 + alpha) * (np.mean(point, axis=0) - bracket)
    return 0.5 * (h + h.T)


def objective_value_and_gradient(fam, sample, theta, cfg):
    """Objective and gradient from one pass (one cache, one logpdf sweep)."""
    data = sample_data(fam, sample)
    if cfg.alpha == 0.0:
        lf = fam.logpdf(data, theta)
        s = fam.score(data, theta)
        return float(np.mean(lf)), np.mean(s, axis=0)
    cache = {}
    alpha = cfg.alpha
    lf = fam.logpdf(data, theta)
    fa = np.exp(alpha * lf)
    const = model_term(fam, theta, cfg, PLAIN_POWER, cache)
    value = float((1 + 1 / alpha) * np.mean(fa) - const)
    s = fam.score(data, theta)
    t = model_term(fam, theta, cfg, SCORE_POWER, cache)
    grad = (1 + alpha) * (np.mean(s * fa[:, None], axis=0) - t)
    return value, grad
