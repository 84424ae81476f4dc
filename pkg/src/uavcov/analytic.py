"""Numerical evaluation of the closed-form handover and coverage expressions.

Layout of the computation:

* conditional handover: triple integral over movement direction, transition
  length and pre-move altitude of the PPP null probability of the
  equal-power lens-complement region, vectorized on Gauss-Legendre grids
  with the transition length truncated where the Rayleigh tail mass drops
  below 1e-8;
* conditional coverage: finite Nakagami sum over derivatives of the
  interference Laplace transform, with the exponent integrals evaluated on
  two-panel (linear + geometric) Gauss grids so both the near-serving peak
  and the slowly decaying far tail are resolved;
* totals: serving-type sum of double integrals over serving distance and
  altitude; the serving-distance integral is transformed through the
  type-nearest CDF so nodes concentrate where the serving-distance density
  actually lives (this matters for the omni antenna, whose receiving radius
  is orders of magnitude larger than the typical serving distance).

Every probability leaving this module is clamped to [0, 1]; drift beyond
1e-6 outside the interval increments a counter that the acceptance suite
asserts to be zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .association import cross_exclusion_limit, height_context
from .errors import GeometryError
from .geometry import (
    displaced_distance,
    equal_power_radius,
    lens_complement_area,
)
from .model import LinkType, SystemParams, horizontal_speed, path_loss
from .quadrature import QuadratureSpec, gauss_nodes, integrate  # noqa: F401  (re-exported)

__all__ = [
    "HandoverContext",
    "CoverageBreakdown",
    "QuadratureSpec",
    "integrate",
    "conditional_handover",
    "conditional_handover_any",
    "handover_probability",
    "laplace_interference",
    "laplace_derivatives",
    "conditional_coverage",
    "coverage_probability",
    "coverage_probability_nearest",
    "coverage_drift_events",
    "reset_coverage_drift_counter",
]

# default node counts; doubled values change probabilities < 1e-4 at the
# baseline scenario (see tests/test_analytic.py::test_grid_convergence)
N_Z = 12        # post-move altitude
N_R0 = 32       # serving distance (transformed variable)
N_THETA = 24    # movement direction
N_RHO = 24      # horizontal transition length
N_ZPREV = 8     # pre-move altitude
N_X = 40        # interference distance, per panel

RAYLEIGH_TAIL_MASS = 1e-8

_drift_events = 0


def coverage_drift_events() -> int:
    """Number of conditional-coverage evaluations that drifted more than
    1e-6 outside [0, 1] before clamping."""
    return _drift_events


def reset_coverage_drift_counter() -> None:
    global _drift_events
    _drift_events = 0


@dataclass(frozen=True)
class HandoverContext:
    """Conditioning of the handover event: serving type, pre-move serving
    distance and post-move altitude."""

    serving: LinkType
    r0: float
    z_t: float


@dataclass(frozen=True)
class CoverageBreakdown:
    """Coverage probability with its companion quantities.

    per_link holds the LoS/NLoS serving contributions to the total (joint
    probabilities of "served by that type and covered").
    """

    total: float
    per_link: tuple[float, float]
    handover_prob: float
    void_prob: float


# ---------------------------------------------------------------------------
# conditional handover probability
# ---------------------------------------------------------------------------

def _cond_handover_grid(serving: LinkType, target: LinkType, r0, z_t: float,
                        params: SystemParams, n_theta=N_THETA, n_rho=N_RHO,
                        n_zprev=N_ZPREV) -> np.ndarray:
    """P(handover to target type | serving type, r0, z_t), vectorized in r0."""
    r0 = np.atleast_1d(np.asarray(r0, dtype=float))
    if params.v == 0.0:
        # zero displacement: the post-move disk is contained in the pre-move one
        return np.zeros_like(r0)
    ctx = height_context(params, z_t)
    ch = params.channel

    theta, w_th = gauss_nodes(0.0, np.pi, n_theta)
    w_th = w_th / np.pi
    rho_max = math.sqrt(math.log(1.0 / RAYLEIGH_TAIL_MASS) / (np.pi * params.mu))
    rho, w_rho = gauss_nodes(0.0, rho_max, n_rho)
    w_rho = w_rho * 2.0 * np.pi * params.mu * rho * np.exp(-np.pi * params.mu * rho * rho)
    z1, w_z1 = gauss_nodes(params.h_lb, params.h_ub, n_zprev)
    w_z1 = w_z1 / (params.h_ub - params.h_lb)

    # kinematics on the (rho, z_prev) mesh, then distances per (r0, theta)
    v_h = horizontal_speed(params.v, rho[:, None], z_t - z1[None, :])
    r_after = displaced_distance(r0[:, None, None, None],
                                 v_h[None, None, :, :],
                                 theta[None, :, None, None])
    x_a = equal_power_radius(serving, target, r0, ctx.h_bar, ch)
    y_b = np.minimum(equal_power_radius(serving, target, r_after, ctx.h_bar, ch),
                     ctx.r_m)
    area = lens_complement_area(x=x_a[:, None, None, None], y=y_b,
                                v=v_h[None, None, :, :])
    stay = np.exp(-params.lambda_b * area)
    w = (w_th[None, :, None, None] * w_rho[None, None, :, None]
         * w_z1[None, None, None, :])
    return np.clip(1.0 - np.sum(stay * w, axis=(1, 2, 3)), 0.0, 1.0)


def _check_ctx(ctx: HandoverContext, params: SystemParams) -> None:
    r_m = height_context(params, ctx.z_t).r_m
    if not 0.0 <= ctx.r0 <= r_m:
        raise GeometryError(
            f"serving distance {ctx.r0} outside [0, {r_m:.3f}] at z={ctx.z_t}")


def conditional_handover(ctx: HandoverContext, target: LinkType,
                         params: SystemParams) -> float:
    """Handover probability to a given target type, conditioned on the
    serving type, the pre-move serving distance and the post-move altitude."""
    _check_ctx(ctx, params)
    return float(_cond_handover_grid(ctx.serving, target, ctx.r0, ctx.z_t, params)[0])


def conditional_handover_any(ctx: HandoverContext, params: SystemParams) -> float:
    """Handover probability to any target type, composed across target types
    under the independent-thinning assumption."""
    _check_ctx(ctx, params)
    stay = 1.0
    for target in LinkType:
        stay *= 1.0 - float(
            _cond_handover_grid(ctx.serving, target, ctx.r0, ctx.z_t, params)[0])
    return 1.0 - stay


# ---------------------------------------------------------------------------
# interference Laplace transform and conditional coverage
# ---------------------------------------------------------------------------

def _interference_nodes(serving: LinkType, r0: np.ndarray, z: float,
                        params: SystemParams, nearest: bool, n_x=N_X):
    """Quadrature nodes for the Laplace exponent integrals.

    Returns, per interferer type, (x nodes, dx weights) of shape
    (len(r0), 2*n_x): a linear panel from the exclusion radius to a
    mid-point around twice the effective height, then a geometric panel to
    the receiving radius.
    """
    ctx = height_context(params, z)
    hi = ctx.r_m
    t01, w01 = gauss_nodes(0.0, 1.0, n_x)
    panels = {}
    for xi in LinkType:
        if nearest or xi is serving:
            lo = r0.astype(float)
        else:
            lo = np.asarray(cross_exclusion_limit(serving, r0, ctx, params),
                            dtype=float)
        lo = np.minimum(lo, hi)
        mid = np.clip(np.maximum(2.0 * ctx.h_bar, 2.0 * lo), lo, hi)
        # linear panel [lo, mid]
        span = mid - lo
        x_lin = lo[:, None] + span[:, None] * t01[None, :]
        w_lin = span[:, None] * w01[None, :]
        # geometric panel (mid, hi]
        ratio = np.log(np.maximum(hi / np.maximum(mid, 1e-300), 1.0))
        x_geo = np.maximum(mid, 1e-300)[:, None] * np.exp(ratio[:, None] * t01[None, :])
        w_geo = x_geo * ratio[:, None] * w01[None, :]
        panels[xi] = (np.concatenate([x_lin, x_geo], axis=1),
                      np.concatenate([w_lin, w_geo], axis=1))
    return panels


def _exponent_derivatives(tau: np.ndarray, serving: LinkType, r0: np.ndarray,
                          z: float, params: SystemParams, max_order: int,
                          nearest: bool = False, n_x=N_X) -> list[np.ndarray]:
    """g(tau) and its tau-derivatives, g being the Laplace exponent
    -2 pi lam sum_xi int P_xi gamma_xi x dx. Vectorized over (tau, r0) pairs."""
    ch = params.channel
    pg = params.p_t * params.g_tot
    panels = _interference_nodes(serving, r0, z, params, nearest, n_x)
    ctx = height_context(params, z)
    ders = [np.zeros_like(tau) for _ in range(max_order + 1)]
    for xi, (xs, ws) in panels.items():
        m = ch.m(xi)
        base = ws * xs * ctx.p_type(xi, xs)          # dx weight * x * P_xi
        c = pg * path_loss(xi, xs, z, ch, params.h_b)
        # powers of (m + tau c) in log space: c spans many orders of magnitude
        log1p_tc = np.log1p(tau[:, None] * c / m)
        gamma = -np.expm1(-m * log1p_tc)
        ders[0] += np.sum(base * gamma, axis=1)
        log_c_over_m = np.log(c) - math.log(m)
        rising = 1.0
        for k in range(1, max_order + 1):
            rising *= m + k - 1
            d_gamma = ((-1.0) ** (k + 1) * rising
                       * np.exp(k * log_c_over_m - (m + k) * log1p_tc))
            ders[k] += np.sum(base * d_gamma, axis=1)
    scale = -2.0 * np.pi * params.lambda_b
    return [scale * d for d in ders]


def _laplace_derivative_grid(tau: np.ndarray, serving: LinkType, r0: np.ndarray,
                             z: float, params: SystemParams, max_order: int,
                             nearest: bool = False) -> list[np.ndarray]:
    """L and its derivatives through the exponential-composition recursion
    L^(l) = sum_j C(l-1, j) L^(j) g^(l-j)."""
    g = _exponent_derivatives(tau, serving, r0, z, params, max_order, nearest)
    ders = [np.exp(g[0])]
    for order in range(1, max_order + 1):
        total = np.zeros_like(tau)
        for j in range(order):
            total += math.comb(order - 1, j) * ders[j] * g[order - j]
        ders.append(total)
    return ders


def laplace_interference(tau: float, serving: LinkType, r0: float, z: float,
                         params: SystemParams) -> float:
    """Laplace transform of the aggregate interference at the given point,
    conditioned on the serving type and distance."""
    ders = _laplace_derivative_grid(np.asarray([tau], dtype=float), serving,
                                    np.asarray([r0], dtype=float), z, params, 0)
    return float(ders[0][0])


def laplace_derivatives(tau: float, serving: LinkType, r0: float, z: float,
                        params: SystemParams, max_order: int) -> list[float]:
    """L^(0..max_order)(tau); the coverage sum uses orders up to m-1."""
    ders = _laplace_derivative_grid(np.asarray([tau], dtype=float), serving,
                                    np.asarray([r0], dtype=float), z, params,
                                    max_order)
    return [float(d[0]) for d in ders]


def _tau_threshold(serving: LinkType, r0, z: float, params: SystemParams):
    zeta = path_loss(serving, r0, z, params.channel, params.h_b)
    return (params.channel.m(serving) * params.t_thresh
            / (params.p_t * params.g_tot * zeta))


def _coverage_grid(serving: LinkType, r0: np.ndarray, z: float,
                   params: SystemParams, nearest: bool = False) -> np.ndarray:
    """Conditional coverage on an array of serving distances."""
    global _drift_events
    m = params.channel.m(serving)
    tau = np.asarray(_tau_threshold(serving, r0, z, params), dtype=float)
    ders = _laplace_derivative_grid(tau, serving, r0, z, params, m - 1, nearest)
    total = np.zeros_like(tau)
    for l in range(m):
        total += (-tau) ** l / math.factorial(l) * ders[l]
    drift = np.maximum(total - 1.0, -total)
    _drift_events += int(np.count_nonzero(drift > 1e-6))
    return np.clip(total, 0.0, 1.0)


def conditional_coverage(serving: LinkType, r0: float, z: float,
                         params: SystemParams) -> float:
    """P(SIR > threshold | serving type, serving distance, altitude)."""
    r_m = height_context(params, z).r_m
    if not 0.0 <= r0 <= r_m:
        raise GeometryError(f"serving distance {r0} outside [0, {r_m:.3f}]")
    return float(_coverage_grid(serving, np.asarray([r0], dtype=float), z, params)[0])


# ---------------------------------------------------------------------------
# marginal metrics: serving-distance and altitude averaging
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _PolicyMetrics:
    """kappa-independent pieces of the coverage/handover integrals."""

    cov_nohandover: dict        # link -> integral of weight * P_cov
    cov_stay: dict              # link -> integral of weight * P_cov * P(no handover)
    handover: float
    assoc: dict                 # link -> A averaged over altitude
    void: float


def _r0_nodes_type(ctx, link: LinkType, params: SystemParams, n_r0: int):
    """Serving-distance nodes via the type-nearest CDF transform.

    Substituting u = 1 - exp(-2 pi lam G_link(r0)) makes the type-nearest
    density the integration measure, so du-weights need only the remaining
    (bounded, smooth) cross-type exclusion factor.
    """
    lam = params.lambda_b
    g_span = ctx.cum_intensity(link, ctx.r_m)
    u_top = -math.expm1(-2.0 * np.pi * lam * g_span)
    u, w_u = gauss_nodes(0.0, u_top, n_r0)
    g_vals = -np.log1p(-u) / (2.0 * np.pi * lam)
    r0 = ctx.inverse_cum(link, g_vals)
    return r0, w_u


def _strongest_metrics_impl(params: SystemParams, n_z: int, n_r0: int) -> _PolicyMetrics:
    band = params.h_ub - params.h_lb
    z_nodes, w_z = gauss_nodes(params.h_lb, params.h_ub, n_z)
    w_z = w_z / band
    lam = params.lambda_b

    cov1 = {link: 0.0 for link in LinkType}
    cov2 = {link: 0.0 for link in LinkType}
    assoc = {link: 0.0 for link in LinkType}
    handover = 0.0
    for z, wz in zip(z_nodes, w_z):
        ctx = height_context(params, z)
        for link in LinkType:
            r0, w_u = _r0_nodes_type(ctx, link, params, n_r0)
            limit = cross_exclusion_limit(link, r0, ctx, params)
            excl = np.exp(-2.0 * np.pi * lam
                          * ctx.cum_intensity(link.other, limit))
            w_joint = w_u * excl                     # integrates A * f_tilde dr0
            assoc[link] += wz * float(np.sum(w_joint))

            p_cov = _coverage_grid(link, r0, z, params)
            stay = np.ones_like(r0)
            for target in LinkType:
                stay *= 1.0 - _cond_handover_grid(link, target, r0, z, params)
            cov1[link] += wz * float(np.sum(w_joint * p_cov))
            cov2[link] += wz * float(np.sum(w_joint * p_cov * stay))
            handover += wz * float(np.sum(w_joint * (1.0 - stay)))
    void = 1.0 - sum(assoc.values())
    return _PolicyMetrics(cov1, cov2, handover, assoc, void)


def _nearest_metrics_impl(params: SystemParams, n_z: int, n_r0: int) -> _PolicyMetrics:
    band = params.h_ub - params.h_lb
    z_nodes, w_z = gauss_nodes(params.h_lb, params.h_ub, n_z)
    w_z = w_z / band
    lam = params.lambda_b

    cov1 = {link: 0.0 for link in LinkType}
    cov2 = {link: 0.0 for link in LinkType}
    assoc = {link: 0.0 for link in LinkType}
    handover = 0.0
    void = 0.0
    for z, wz in zip(z_nodes, w_z):
        ctx = height_context(params, z)
        # contact-distance CDF transform: du is exactly f^n(r0) dr0
        u_top = -math.expm1(-np.pi * lam * ctx.r_m ** 2)
        u, w_u = gauss_nodes(0.0, u_top, n_r0)
        r0 = np.sqrt(-np.log1p(-u) / (np.pi * lam))
        void += wz * (1.0 - u_top)

        # type is ignored for handover under the nearest policy: identity map
        p_h = _cond_handover_grid(LinkType.LOS, LinkType.LOS, r0, z, params)
        handover += wz * float(np.sum(w_u * p_h))
        for link in LinkType:
            p_type = ctx.p_type(link, r0)
            p_cov = _coverage_grid(link, r0, z, params, nearest=True)
            assoc[link] += wz * float(np.sum(w_u * p_type))
            cov1[link] += wz * float(np.sum(w_u * p_type * p_cov))
            cov2[link] += wz * float(np.sum(w_u * p_type * p_cov * (1.0 - p_h)))
    return _PolicyMetrics(cov1, cov2, handover, assoc, void)


@lru_cache(maxsize=64)
def _policy_metrics(params_key: SystemParams, nearest: bool,
                    n_z: int, n_r0: int) -> _PolicyMetrics:
    if nearest:
        return _nearest_metrics_impl(params_key, n_z, n_r0)
    return _strongest_metrics_impl(params_key, n_z, n_r0)


def _metrics(params: SystemParams, nearest: bool, n_z=N_Z, n_r0=N_R0) -> _PolicyMetrics:
    # the heavy integrals do not depend on kappa; key the cache without it
    return _policy_metrics(replace(params, kappa=0.0), nearest, n_z, n_r0)


def _breakdown(params: SystemParams, metrics: _PolicyMetrics) -> CoverageBreakdown:
    k = params.kappa
    per_link = tuple(
        float((1.0 - k) * metrics.cov_nohandover[link] + k * metrics.cov_stay[link])
        for link in LinkType)
    total = float(sum(per_link))
    return CoverageBreakdown(
        total=min(max(total, 0.0), 1.0),
        per_link=per_link,
        handover_prob=float(metrics.handover),
        void_prob=min(max(float(metrics.void), 0.0), 1.0),
    )


def coverage_probability(params: SystemParams) -> CoverageBreakdown:
    """Coverage of the mobile user under strongest-average-RSS association,
    combining handover-free coverage with the handover-survival term."""
    return _breakdown(params, _metrics(params, nearest=False))


def coverage_probability_nearest(params: SystemParams) -> CoverageBreakdown:
    """Coverage under nearest-GBS association (type-blind handover and
    interference limits starting at the serving distance)."""
    return _breakdown(params, _metrics(params, nearest=True))


def handover_probability(params: SystemParams) -> float:
    """Marginal handover probability: conditional handover averaged over the
    serving type, serving distance and both altitudes; void mass counts as
    no handover."""
    from .model import AssociationPolicy

    nearest = params.policy is AssociationPolicy.NEAREST
    return _metrics(params, nearest=nearest).handover


def association_marginals(params: SystemParams, nearest: bool = False) -> dict:
    """Altitude-averaged association probabilities and void probability."""
    metrics = _metrics(params, nearest=nearest)
    return {
        "assoc_los": metrics.assoc[LinkType.LOS],
        "assoc_nlos": metrics.assoc[LinkType.NLOS],
        "void": metrics.void,
    }
