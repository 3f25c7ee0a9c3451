"""Population-level machinery: the objective M, the matrices K and J, the
sandwich covariance, empirical plug-ins, and numerical regularity diagnostics.

The true density g is any finite Mixture of catalog family members (the
one-component case covers g inside the model). All integrals run over the
hull of the participating tail windows. No alpha branching happens here: the
K/U/J formulas are alpha=0-safe as written, and M is computed as the
g-weighted integral of the criterion, inheriting the divergence module's
alpha dispatch.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .divergence import as_mixture, criterion, criterion_gradient
from .errors import EstimationError, IntegrabilityError, NumericalError
from .families import (INFO_POWER, PLAIN_POWER, SCORE_OUTER_POWER,
                       SCORE_POWER, from_working, integral_term,
                       integrate_model, to_working, working_curvature,
                       working_jacobian)
from .optimize import maximize

MODEL_BASED = "model"
EMPIRICAL = "empirical"


@dataclass
class SandwichCov:
    """K, U, J and sigma = J^-1 K J^-1 with provenance.

    sigma is produced by two linear solves, never an explicit inverse; K and
    sigma are symmetric PSD within tolerance, J symmetric.
    """

    K: np.ndarray
    J: np.ndarray
    U: np.ndarray
    sigma: np.ndarray
    provenance: str
    cond_J: float

    def standard_errors(self, n):
        return np.sqrt(np.diag(self.sigma) / n)


def _windows_and_hints(fam, theta, g, quad):
    windows = [fam.window(theta, quad.tail_eps), g.window(quad.tail_eps)]
    hints = tuple(fam.panel_hints(theta, quad.tail_eps)) \
        + tuple(g.panel_hints(quad.tail_eps))
    return windows, hints


def population_objective(fam, theta, g, cfg):
    """M(theta): the expected criterion under the true density g.

    Also verifies the g-integrability of |m| that defines membership in the
    integrable parameter region; a non-converging integral raises
    IntegrabilityError.
    """
    g = as_mixture(g)
    theta = fam.require_feasible(theta)
    cache = {}

    def integrand(x):
        m = criterion(fam, x, theta, cfg, cache)
        gv = g.pdf(x)
        return np.stack([m * gv, np.abs(m) * gv], axis=1)

    windows, hints = _windows_and_hints(fam, theta, g, cfg.quad)
    try:
        value, _ = integrate_model(fam.support, integrand, windows,
                                   cfg.quad, hints)
    except NumericalError as exc:
        raise IntegrabilityError(
            f"criterion not g-integrable at theta={theta}: {exc}",
            error_estimate=exc.error_estimate) from exc
    signed, absval = float(value[0]), float(value[1])
    if not np.isfinite(absval):
        raise IntegrabilityError(
            f"criterion not g-integrable at theta={theta} "
            f"(integral of |m| g diverges)")
    return signed


def population_gradient(fam, theta, g, cfg):
    """Gradient of M in natural coordinates (integral of the criterion
    gradient against g)."""
    g = as_mixture(g)
    theta = fam.require_feasible(theta)
    cache = {}

    def integrand(x):
        return criterion_gradient(fam, x, theta, cfg, cache) * g.pdf(x)[:, None]

    windows, hints = _windows_and_hints(fam, theta, g, cfg.quad)
    value, _ = integrate_model(fam.support, integrand, windows, cfg.quad, hints)
    return value


def compute_K(fam, theta, g, cfg):
    """K and its by-product U.

    K is the g-weighted integral of S S^t f^(2 alpha) minus U U^t, with U the
    g-weighted integral of S f^alpha. K is symmetrized; a smallest eigenvalue
    materially below zero triggers a numerical warning.
    """
    g = as_mixture(g)
    theta = fam.require_feasible(theta)
    alpha = cfg.alpha
    p = fam.p

    def integrand(x):
        s = fam.score(x, theta)
        fa = np.exp(alpha * fam.logpdf(x, theta))
        gv = g.pdf(x)
        outer = np.einsum("ni,nj->nij", s, s) * (fa ** 2 * gv)[:, None, None]
        u = s * (fa * gv)[:, None]
        return np.concatenate([outer.reshape(-1, p * p), u], axis=1)

    windows, hints = _windows_and_hints(fam, theta, g, cfg.quad)
    value, _ = integrate_model(fam.support, integrand, windows, cfg.quad, hints)
    A = value[:p * p].reshape(p, p)
    U = value[p * p:]
    K = A - np.outer(U, U)
    K = 0.5 * (K + K.T)
    _check_psd(K, "K")
    return K, U


def compute_J(fam, theta, g, cfg):
    """J: the model integral of S S^t f^(1+alpha) plus the g-vs-model
    correction integral of (i - alpha S S^t)(g - f) f^alpha. The second term
    vanishes identically when g is the model density at theta."""
    g = as_mixture(g)
    theta = fam.require_feasible(theta)
    alpha = cfg.alpha
    t1 = integral_term(fam, theta, alpha, SCORE_OUTER_POWER, cfg.quad)

    def integrand(x):
        s = fam.score(x, theta)
        info = fam.info(x, theta)
        lf = fam.logpdf(x, theta)
        fa = np.exp(alpha * lf)
        fv = np.exp(lf)
        gv = g.pdf(x)
        core = info - alpha * np.einsum("ni,nj->nij", s, s)
        return core * ((gv - fv) * fa)[:, None, None]

    windows, hints = _windows_and_hints(fam, theta, g, cfg.quad)
    t2, _ = integrate_model(fam.support, integrand, windows, cfg.quad, hints)
    J = t1 + t2
    return 0.5 * (J + J.T)


def _check_psd(mat, label, tol=1e-8):
    w = np.linalg.eigvalsh(mat)
    scale = max(float(np.max(np.abs(w))), 1.0)
    if w.min() < -tol * scale:
        warnings.warn(
            f"{label} is indefinite beyond tolerance "
            f"(smallest eigenvalue {w.min():.3e})", RuntimeWarning)


def _assemble(K, J, U, provenance, cond_cap):
    cond = float(np.linalg.cond(J))
    if not np.isfinite(cond) or cond > cond_cap:
        raise EstimationError(
            f"J is singular or ill-conditioned (cond={cond:.3e})",
            detail={"cond_J": cond})
    X = np.linalg.solve(J, K)
    sigma = np.linalg.solve(J, X.T).T
    sigma = 0.5 * (sigma + sigma.T)
    _check_psd(sigma, "sigma")
    return SandwichCov(K=K, J=J, U=U, sigma=sigma,
                       provenance=provenance, cond_J=cond)


def sandwich(fam, theta, g, cfg, cond_cap=1e12):
    """Model-based sandwich covariance J^-1 K J^-1 at theta under g."""
    K, U = compute_K(fam, theta, g, cfg)
    J = compute_J(fam, theta, g, cfg)
    return _assemble(K, J, U, MODEL_BASED, cond_cap)


def empirical_sandwich(fam, theta_hat, sample, cfg, cond_cap=1e12):
    """Plug-in sandwich: g replaced by the empirical distribution in the K
    and J formulas, model integrals kept exact."""
    from .divergence import sample_data
    data = sample_data(fam, sample)
    theta_hat = fam.require_feasible(theta_hat)
    if data.shape[0] < fam.p + 1:
        raise EstimationError(
            f"need at least p+1={fam.p + 1} observations for the empirical "
            f"sandwich, got {data.shape[0]}")
    alpha = cfg.alpha
    s = fam.score(data, theta_hat)
    info = fam.info(data, theta_hat)
    fa = np.exp(alpha * fam.logpdf(data, theta_hat))
    outer = np.einsum("ni,nj->nij", s, s)

    U = np.mean(s * fa[:, None], axis=0)
    K = np.mean(outer * (fa ** 2)[:, None, None], axis=0) - np.outer(U, U)
    K = 0.5 * (K + K.T)

    t_outer = integral_term(fam, theta_hat, alpha, SCORE_OUTER_POWER, cfg.quad)
    t_info = integral_term(fam, theta_hat, alpha, INFO_POWER, cfg.quad)
    data_term = np.mean((info - alpha * outer) * fa[:, None, None], axis=0)
    J = (1 + alpha) * t_outer - t_info + data_term
    J = 0.5 * (J + J.T)
    return _assemble(K, J, U, EMPIRICAL, cond_cap)


# ----------------------------------------------------------------------
# target-parameter projection
# ----------------------------------------------------------------------

def dpd_projection(fam, g, cfg, init=None, grid_span=1.0, grid_points=7,
                   grad_tol=1e-9):
    """argmax of M over the family: the projection of g onto the model.

    Coarse grid in working coordinates around a moment-based start, then
    Newton ascent using the analytic M-gradient and the population Hessian
    -(1+alpha) J.
    """
    g = as_mixture(g)
    if init is None:
        rng = np.random.Generator(np.random.Philox(key=0x9E3779B97F4A7C15))
        init = fam.initial_guess(g.sample(4096, rng))
    z0 = to_working(fam, np.asarray(init, dtype=float))
    offsets = np.linspace(-grid_span, grid_span, grid_points)
    grids = np.meshgrid(*[z0[j] + offsets for j in range(fam.p)],
                        indexing="ij")
    cand = np.stack([gr.ravel() for gr in grids], axis=1)

    def m_of_z(z):
        theta = from_working(fam, z)
        if not fam.feasible(theta):
            return -np.inf
        try:
            return population_objective(fam, theta, g, cfg)
        except IntegrabilityError:
            return -np.inf

    vals = np.array([m_of_z(z) for z in cand])
    z_best = cand[int(np.argmax(vals))]

    def value_and_grad(z):
        theta = from_working(fam, z)
        if not fam.feasible(theta):
            return -np.inf, np.zeros(fam.p)
        v = population_objective(fam, theta, g, cfg)
        grad = population_gradient(fam, theta, g, cfg)
        return v, grad * working_jacobian(fam, theta)

    def hess(z):
        theta = from_working(fam, z)
        H_nat = -(1 + cfg.alpha) * compute_J(fam, theta, g, cfg)
        jac = working_jacobian(fam, theta)
        grad = population_gradient(fam, theta, g, cfg)
        return (jac[:, None] * H_nat * jac[None, :]
                + np.diag(grad * working_curvature(fam, theta)))

    res = maximize(value_and_grad, z_best, hessian=hess, grad_tol=grad_tol)
    return from_working(fam, res.z)


# ----------------------------------------------------------------------
# regularity diagnostics
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsConfig:
    """Thresholds and grids for the regularity checks; verdicts derive
    deterministically from these."""

    hessian_identity_tol: float = 1e-3
    interchange_tol: float = 1e-6
    sup_rel_change: float = 1e-3   # 0.1% convergence rule for grid sups
    max_doublings: int = 8
    grid_points: int = 2048
    ball_radius_scale: float = 0.1
    ball_radius_floor: float = 0.1
    ball_directions: int = 32


@dataclass
class DiagnosticsReport:
    """Numerical evidence for the smoothness/boundedness conditions behind
    asymptotic normality; findings are verdicts, never hard failures."""

    family: str
    alpha: float
    theta0: list
    hessian_identity_error: float
    interchange_error: float
    score_bound_sups: list        # per-coordinate running sup
    score_bound_bounded: list     # per-coordinate boolean
    lipschitz_sup: float          # uniform bound over grid and ball
    lipschitz_phi2_integral: float
    lipschitz_ball_radius: float
    info_integral_model: float    # max_jk of integral |i_jk| f^(1+alpha)
    info_integral_true: float     # max_jk of integral |i_jk| f^alpha g
    verdicts: dict
    thresholds: dict

    def to_dict(self):
        return {
            "family": self.family,
            "alpha": self.alpha,
            "theta0": list(map(float, self.theta0)),
            "hessian_identity_error": self.hessian_identity_error,
            "interchange_error": self.interchange_error,
            "score_bound_sups": list(map(float, self.score_bound_sups)),
            "score_bound_bounded": list(map(bool, self.score_bound_bounded)),
            "lipschitz_sup": self.lipschitz_sup,
            "lipschitz_phi2_integral": self.lipschitz_phi2_integral,
            "lipschitz_ball_radius": self.lipschitz_ball_radius,
            "info_integral_model": self.info_integral_model,
            "info_integral_true": self.info_integral_true,
            "verdicts": dict(self.verdicts),
            "thresholds": dict(self.thresholds),
        }

    def render_text(self):
        lines = [
            f"Regularity diagnostics: family={self.family} "
            f"alpha={self.alpha:g} theta0={np.asarray(self.theta0)}",
            f"  population-Hessian identity   rel.error = "
            f"{self.hessian_identity_error:.3e}  "
            f"[{self.verdicts['hessian_identity']}]",
            f"  derivative-under-integral     discrepancy = "
            f"{self.interchange_error:.3e}  [{self.verdicts['interchange']}]",
            f"  squared-score power bound     sups = "
            + ", ".join(f"{s:.4g}" for s in self.score_bound_sups)
            + f"  [{self.verdicts['score_bound']}]",
            f"  Lipschitz envelope            sup = {self.lipschitz_sup:.4g}, "
            f"integral phi^2 g = {self.lipschitz_phi2_integral:.4g}  "
            f"[{self.verdicts['lipschitz']}]",
            f"  information integrability     model = "
            f"{self.info_integral_model:.4g}, true = "
            f"{self.info_integral_true:.4g}  "
            f"[{self.verdicts['info_integrability']}]",
            f"  overall: {self.verdicts['overall']}",
        ]
        return "\n".join(lines)


def _fd_hessian(fn, theta, rel_step=3.16e-4):
    theta = np.asarray(theta, dtype=float)
    p = theta.shape[0]
    h = rel_step * np.maximum(np.abs(theta), 1.0)
    H = np.empty((p, p))
    f0 = fn(theta)
    for j in range(p):
        ej = np.zeros(p)
        ej[j] = h[j]
        H[j, j] = (fn(theta + ej) - 2 * f0 + fn(theta - ej)) / h[j] ** 2
        for k in range(j + 1, p):
            ek = np.zeros(p)
            ek[k] = h[k]
            H[j, k] = H[k, j] = (
                fn(theta + ej + ek) - fn(theta + ej - ek)
                - fn(theta - ej + ek) + fn(theta - ej - ek)
            ) / (4 * h[j] * h[k])
    return H


def _expanding_sup(fam, theta, alpha, dcfg):
    """Per-coordinate running sup of S_j^2 f^(2 alpha): the window doubles
    into the tails, each extension is scanned on its own fine grid, and the
    running sup is monotone by construction. Flagged unbounded when the sup
    keeps growing over the last three doublings."""

    def sup_on(xs):
        if xs.shape[0] == 0:
            return np.zeros(fam.p)
        s = fam.score(xs, theta)
        w = np.exp(2 * alpha * fam.logpdf(xs, theta))
        return np.max(s ** 2 * w[:, None], axis=0)

    lo, hi = fam.window(theta, 1e-6)
    if fam.support.is_discrete:
        cur_hi = max(int(np.ceil(hi)), 8)
        running = sup_on(np.arange(0, cur_hi + 1, dtype=float))
        history = [running]
        for _ in range(dcfg.max_doublings):
            new_hi = 2 * cur_hi
            ext = np.arange(cur_hi + 1, new_hi + 1, dtype=float)
            running = np.maximum(running, sup_on(ext))
            history.append(running)
            cur_hi = new_hi
    else:
        cur_lo = max(lo, fam.support.lo)
        cur_hi = min(hi, fam.support.hi)
        running = sup_on(np.linspace(cur_lo, cur_hi, dcfg.grid_points))
        history = [running]
        width = cur_hi - cur_lo
        for _ in range(dcfg.max_doublings):
            new_lo = max(cur_lo - width / 2, fam.support.lo)
            new_hi = min(cur_hi + width / 2, fam.support.hi)
            pieces = []
            if new_lo < cur_lo:
                pieces.append(np.linspace(new_lo, cur_lo, dcfg.grid_points))
            if new_hi > cur_hi:
                pieces.append(np.linspace(cur_hi, new_hi, dcfg.grid_points))
            ext_sup = (np.max([sup_on(p) for p in pieces], axis=0)
                       if pieces else np.zeros(fam.p))
            running = np.maximum(running, ext_sup)
            history.append(running)
            cur_lo, cur_hi = new_lo, new_hi
            width = cur_hi - cur_lo

    history = np.asarray(history)
    sups = history[-1]
    bounded = []
    for j in range(fam.p):
        hj = history[:, j]
        rel = np.diff(hj) / np.maximum(np.abs(hj[1:]), 1e-300)
        growing = bool(np.all(rel[-3:] > dcfg.sup_rel_change))
        settled = bool(rel[-1] < dcfg.sup_rel_change)
        bounded.append(settled and not growing)
    return sups, bounded


def _ball_directions(p, count):
    """Deterministic unit directions covering the working-coordinate ball."""
    if p == 1:
        return np.array([[1.0], [-1.0]] * ((count + 1) // 2))[:count]
    if p == 2:
        ang = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    rng = np.random.Generator(np.random.Philox(key=0xD1B54A32D192ED03))
    u = rng.standard_normal((count, p))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def diagnose_regularity(fam, theta0, g, cfg, dcfg=DiagnosticsConfig()):
    """Numerical stand-ins for the normality conditions.

    (a) finite-difference Hessian of M vs -(1+alpha) J;
    (b) expanding-grid sups of the squared score times f^(2 alpha);
    (c) Lipschitz envelope phi(x) over a working-coordinate ball and the
        g-integral of phi^2;
    (d) derivative of the f^(1+alpha) integral vs the integral of its
        derivative (both by quadrature);
    (e) integrability of |i_jk| f^alpha against the model and against g.
    """
    g = as_mixture(g)
    theta0 = fam.require_feasible(theta0)
    alpha = cfg.alpha

    # (a) Hessian identity
    J = compute_J(fam, theta0, g, cfg)
    target = -(1 + alpha) * J
    H_fd = _fd_hessian(lambda t: population_objective(fam, t, g, cfg), theta0)
    hess_err = float(np.linalg.norm(H_fd - target)
                     / max(np.linalg.norm(target), 1e-300))

    # (d) interchange check, quadrature on both sides
    h = 6e-6 * np.maximum(np.abs(theta0), 1.0)
    fd = np.empty(fam.p)
    for j in range(fam.p):
        ej = np.zeros(fam.p)
        ej[j] = h[j]
        fd[j] = (integral_term(fam, theta0 + ej, alpha, PLAIN_POWER,
                               cfg.quad, method="quadrature")
                 - integral_term(fam, theta0 - ej, alpha, PLAIN_POWER,
                                 cfg.quad, method="quadrature")) / (2 * h[j])
    analytic = (1 + alpha) * integral_term(fam, theta0, alpha, SCORE_POWER,
                                           cfg.quad, method="quadrature")
    interchange = float(np.max(np.abs(fd - analytic)
                               / np.maximum(1.0, np.abs(analytic))))

    # (b) score bound sups
    sups, bounded = _expanding_sup(fam, theta0, alpha, dcfg)

    # (c) Lipschitz envelope over the theta ball
    z0 = to_working(fam, theta0)
    radius = max(dcfg.ball_radius_scale * float(np.linalg.norm(z0)),
                 dcfg.ball_radius_floor)
    dirs = _ball_directions(fam.p, dcfg.ball_directions)
    thetas = [theta0] + [from_working(fam, z0 + radius * u) for u in dirs]
    caches = [{} for _ in thetas]
    state = {"sup": 0.0}

    def phi2_g(x):
        phi = np.zeros(x.shape[0])
        for th, cache in zip(thetas, caches):
            grads = criterion_gradient(fam, x, th, cfg, cache)
            phi = np.maximum(phi, np.linalg.norm(grads, axis=1))
        state["sup"] = max(state["sup"], float(phi.max(initial=0.0)))
        return phi ** 2 * g.pdf(x)

    windows, hints = _windows_and_hints(fam, theta0, g, cfg.quad)
    phi2_int, _ = integrate_model(fam.support, phi2_g, windows, cfg.quad, hints)
    phi2_int = float(phi2_int)

    # (e) information integrability (phi_jk = |i_jk| f^alpha)
    def info_weighted(x):
        info = np.abs(fam.info(x, theta0))
        lf = fam.logpdf(x, theta0)
        fa = np.exp(alpha * lf)
        fv = np.exp(lf)
        gv = g.pdf(x)
        return np.stack([info * (fa * fv)[:, None, None],
                         info * (fa * gv)[:, None, None]], axis=1)

    info_ok = True
    try:
        vals, _ = integrate_model(fam.support, info_weighted, windows,
                                  cfg.quad, hints)
        info_model = float(np.max(vals[0]))
        info_true = float(np.max(vals[1]))
    except NumericalError:
        info_ok, info_model, info_true = False, float("inf"), float("inf")

    verdicts = {
        "hessian_identity": "pass" if hess_err < dcfg.hessian_identity_tol
        else "warn",
        "interchange": "pass" if interchange < dcfg.interchange_tol
        else "warn",
        "score_bound": "pass" if all(bounded) else "warn",
        "lipschitz": "pass" if np.isfinite(phi2_int) and state["sup"] < np.inf
        else "warn",
        "info_integrability": "pass"
        if info_ok and np.isfinite(info_model) and np.isfinite(info_true)
        else "warn",
    }
    verdicts["overall"] = ("pass" if all(v == "pass" for k, v in
                                         verdicts.items() if k != "overall")
                           else "warn")
    return DiagnosticsReport(
        family=fam.name, alpha=alpha, theta0=list(map(float, theta0)),
        hessian_identity_error=hess_err, interchange_error=interchange,
        score_bound_sups=list(map(float, sups)),
        score_bound_bounded=bounded,
        lipschitz_sup=state["sup"], lipschitz_phi2_integral=phi2_int,
        lipschitz_ball_radius=radius,
        info_integral_model=info_model, info_integral_true=info_true,
        verdicts=verdicts,
        thresholds={"hessian_identity_tol": dcfg.hessian_identity_tol,
                    "interchange_tol": dcfg.interchange_tol,
                    "sup_rel_change": dcfg.sup_rel_change})
