"""Rao-Blackwellized particle filter for superelliptical contour tracking.

Particles carry the nonlinear kinematic state (orientation, centroid,
velocity, and optionally the shape exponent q) while each hypothesis keeps
an exact conditional Gaussian over the linear contour coefficients
lam = d**(-q). One step executes, in order:

  1. weight update from the pseudomeasurement likelihood ("each point lies
     on the contour") and the gated scale-constraint factors,
  2. weight normalization in the log domain,
  3. systematic resampling (conditional means/covariances travel with
     their parent particle),
  4. masked Kalman measurement update of (mu, Sigma),
  5. kinematic sampling from the constant-velocity transition,
  6. Kalman time update of Sigma.

Visibility gates are evaluated per particle from its own predicted extent,
and the Kalman gain rows of unobserved axes are zeroed so those estimates
pass through unchanged. Hypotheses whose predicted lam (or q) is not
strictly positive receive zero weight rather than being clamped.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .geometry import SuperellipseExtent
from .lidar import Scan
from .visibility import VisibilityMargins, axis_gates

LOG_TWO_PI = float(np.log(2.0 * np.pi))


class InitializationError(ValueError):
    """Raised when the filter cannot be initialized from the first scans."""


class DegenerateFilterError(RuntimeError):
    """Raised when every particle weight collapses to zero."""


@dataclass
class NonlinearState:
    """Sampled (non-Kalman) part of the state. ``q`` is set in unknown-q mode."""

    phi: float
    c: np.ndarray
    c_dot: np.ndarray
    q: float | None = None


@dataclass
class Particle:
    """One hypothesis: nonlinear state, conditional Gaussian over lam, log weight."""

    x_n: NonlinearState
    mu: np.ndarray
    sigma: np.ndarray
    log_w: float


@dataclass(frozen=True)
class FilterConfig:
    """Filter dimensioning, process/measurement noise and policies.

    ``q_fixed=None`` switches to unknown-q mode where the exponent is part
    of the sampled state. ``gamma_policy`` selects the effective
    pseudomeasurement variance used in the weight update: "fixed" uses
    ``r_h_target`` for every particle and measurement, "marginalized" uses
    ``r_pseudo + g.T Sigma g``. With ``first_update_marginalized`` the very
    first weight update after initialization uses the marginalized variance
    regardless of policy: the initial conditional covariance is a vague
    prior, and treating the synthetic initial mean as certain there
    collapses the particle set onto hypotheses that merely fit the
    initialization extent.
    """

    n_particles: int = 1000
    T: float = 0.1
    sigma_phi: float = float(np.pi / 36.0)
    sigma_a: float = 2.0
    sigma_lambda: float = 1e-4
    sigma_q: float = 0.1
    r_pseudo: float = 0.09
    r_scale: float = 0.09
    r_h_target: float = 0.09
    margins: VisibilityMargins = VisibilityMargins()
    q_fixed: float | None = 5.0
    q_prior_mean: float = 2.0
    q_prior_std: float = 0.2
    gamma_policy: str = "fixed"
    first_update_marginalized: bool = False
    init_half_lengths: tuple[float, float] = (2.0, 1.0)
    init_sigma_lam: float = 100.0
    gate_half_length_cap: tuple[float, float] | None = None

    @property
    def gate_cap(self) -> np.ndarray:
        cap = self.gate_half_length_cap
        return np.asarray(cap if cap is not None else self.init_half_lengths, dtype=float)

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("need at least 2 particles")
        for name in ("T", "sigma_phi", "sigma_a", "sigma_lambda", "sigma_q",
                     "r_pseudo", "r_scale", "r_h_target"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.q_fixed is not None and not self.q_fixed > 0:
            raise ValueError("q_fixed must be positive when set")
        if self.gamma_policy not in ("fixed", "marginalized"):
            raise ValueError(f"unknown gamma policy {self.gamma_policy!r}")

    @property
    def unknown_q(self) -> bool:
        return self.q_fixed is None


@dataclass
class TrackEstimate:
    """Weighted posterior summary for one time step."""

    x_n_hat: NonlinearState
    lam_hat: np.ndarray
    d_hat: np.ndarray
    extent_hat: SuperellipseExtent


@dataclass
class StepDiagnostics:
    k: int
    n_points: int
    ess: float
    gate_rates: np.ndarray
    wall_time: float
    regularized: int = 0


class ParticleSet:
    """Struct-of-arrays particle storage, one row per hypothesis.

    ``q`` always holds the per-particle exponent; in known-q mode every
    entry equals the configured constant and is never perturbed.
    """

    __slots__ = ("phi", "c", "c_dot", "q", "mu", "sigma", "log_w", "updates_done",
                 "velocity_prior")

    def __init__(self, phi, c, c_dot, q, mu, sigma, log_w, updates_done: int = 0,
                 velocity_prior=None):
        self.phi = np.asarray(phi, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.c_dot = np.asarray(c_dot, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.mu = np.asarray(mu, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)
        self.log_w = np.asarray(log_w, dtype=float)
        self.updates_done = updates_done
        # (mean, std) of the initialization velocity prior while the
        # velocity is still unobserved; cleared after the first update.
        self.velocity_prior = velocity_prior

    def __len__(self) -> int:
        return self.phi.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_w)

    def particle(self, i: int, unknown_q: bool = False) -> Particle:
        x_n = NonlinearState(
            phi=float(self.phi[i]),
            c=self.c[i].copy(),
            c_dot=self.c_dot[i].copy(),
            q=float(self.q[i]) if unknown_q else None,
        )
        return Particle(x_n=x_n, mu=self.mu[i].copy(), sigma=self.sigma[i].copy(),
                        log_w=float(self.log_w[i]))

    @classmethod
    def from_particles(cls, particles: list[Particle], q_fixed: float | None = None):
        qs = [p.x_n.q if p.x_n.q is not None else q_fixed for p in particles]
        if any(q is None for q in qs):
            raise ValueError("particle q missing and no q_fixed provided")
        return cls(
            phi=[p.x_n.phi for p in particles],
            c=[p.x_n.c for p in particles],
            c_dot=[p.x_n.c_dot for p in particles],
            q=qs,
            mu=[p.mu for p in particles],
            sigma=[p.sigma for p in particles],
            log_w=[p.log_w for p in particles],
        )

    def take(self, idx: np.ndarray) -> None:
        """Gather rows in place (resampling support)."""
        self.phi = self.phi[idx].copy()
        self.c = self.c[idx].copy()
        self.c_dot = self.c_dot[idx].copy()
        self.q = self.q[idx].copy()
        self.mu = self.mu[idx].copy()
        self.sigma = self.sigma[idx].copy()
        self.log_w = self.log_w[idx].copy()


def init_particles(
    scan0: Scan, scan1: Scan, cfg: FilterConfig, rng: np.random.Generator
) -> ParticleSet:
    """Draw the initial particle set from the two-scan prior.

    The kinematic prior is centred on the bounding-box centre of the first
    scan with the velocity estimated from the difference of the two scan
    means; orientation prior is N(0, (pi/4)^2). Every hypothesis starts
    from the same conditional extent Gaussian. In unknown-q mode the
    exponent is drawn from its own Gaussian prior (first draw in the
    stream).
    """
    if len(scan0) == 0 or len(scan1) == 0:
        raise InitializationError("initialization requires two nonempty scans")
    n = cfg.n_particles
    bbox_center = 0.5 * (scan0.points.min(axis=0) + scan0.points.max(axis=0))
    v0 = (scan1.points.mean(axis=0) - scan0.points.mean(axis=0)) / cfg.T

    if cfg.unknown_q:
        q = rng.normal(cfg.q_prior_mean, cfg.q_prior_std, n)
    else:
        q = np.full(n, cfg.q_fixed)
    phi = rng.normal(0.0, np.pi / 4.0, n)
    c = bbox_center + rng.normal(0.0, 1.0, (n, 2))
    c_dot = v0 + rng.normal(0.0, 2.0, (n, 2))

    d0 = np.asarray(cfg.init_half_lengths, dtype=float)
    mu = d0[None, :] ** -q[:, None]
    sigma = np.broadcast_to(cfg.init_sigma_lam * np.eye(2), (n, 2, 2)).copy()
    log_w = np.full(n, -np.log(n))
    return ParticleSet(phi=phi, c=c, c_dot=c_dot, q=q, mu=mu, sigma=sigma, log_w=log_w,
                       velocity_prior=(v0, 2.0))


def body_frame_points(pset: ParticleSet, points: np.ndarray) -> np.ndarray:
    """Measurements in each particle's body frame, shape (N, M, 2)."""
    rel = points[None, :, :] - pset.c[:, None, :]
    cs, sn = np.cos(pset.phi)[:, None], np.sin(pset.phi)[:, None]
    return np.stack(
        [cs * rel[:, :, 0] + sn * rel[:, :, 1], -sn * rel[:, :, 0] + cs * rel[:, :, 1]],
        axis=-1,
    )


def measurement_rows(
    pset: ParticleSet, points: np.ndarray, body: np.ndarray | None = None
) -> np.ndarray:
    """Linearized measurement rows g = |R(phi).T (y - c)|**q, shape (N, M, 2).

    Row g makes the contour equation read g.T lam = 1 for an on-contour
    point, so these are both the likelihood regressors and the Kalman
    measurement matrix rows.
    """
    if body is None:
        body = body_frame_points(pset, points)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.abs(body) ** pset.q[:, None, None]


def predicted_half_lengths(pset: ParticleSet) -> np.ndarray:
    """Half-lengths implied by the predicted conditional mean, (N, 2).

    Rows with a nonpositive mean or exponent come out NaN; such hypotheses
    are rejected by the weight update, and NaN compares False in the gate
    tests so they never enter the masked Kalman update either.
    """
    valid = (pset.mu > 0).all(axis=1) & (pset.q > 0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        d = pset.mu ** (-1.0 / pset.q[:, None])
    d[~valid] = np.nan
    return d


def gate_half_lengths(pset: ParticleSet, cfg: FilterConfig) -> np.ndarray:
    """Half-lengths used in the per-particle visibility gate tests.

    The gate slabs use each hypothesis's own pose, but its claimed
    half-lengths are capped at a nominal size: an inflated (or degenerate)
    extent hypothesis would otherwise widen its slabs until the very gate
    whose constraint should reject it reports the sensor inside and turns
    that constraint off.
    """
    return np.minimum(predicted_half_lengths(pset), cfg.gate_cap)


def pseudo_log_likelihood(
    pset: ParticleSet,
    scan: Scan,
    cfg: FilterConfig,
    g: np.ndarray | None = None,
    marginalized: bool | None = None,
) -> np.ndarray:
    """Per-particle log likelihood that all scan points lie on the contour.

    Each point contributes log N(mu.T g; 1, r_h). Under the "fixed" gamma
    policy r_h equals ``r_h_target`` for every term; under "marginalized"
    it is ``r_pseudo + g.T Sigma g`` with the predicted covariance.
    ``marginalized`` overrides the configured policy when given. An empty
    scan contributes 0.
    """
    n = len(pset)
    if len(scan) == 0:
        return np.zeros(n)
    if g is None:
        g = measurement_rows(pset, scan.points)
    if marginalized is None:
        marginalized = cfg.gamma_policy == "marginalized"
    z = np.einsum("nmj,nj->nm", g, pset.mu)
    if not marginalized:
        r_h = cfg.r_h_target
        log_norm = 0.5 * (LOG_TWO_PI + np.log(r_h))
        ll = -0.5 * (z - 1.0) ** 2 / r_h - log_norm
    else:
        r_h = cfg.r_pseudo + np.einsum("nmi,nij,nmj->nm", g, pset.sigma, g)
        ll = -0.5 * ((z - 1.0) ** 2 / r_h + LOG_TWO_PI + np.log(r_h))
    return ll.sum(axis=1)


def scale_constraint_log_factor(
    pset: ParticleSet,
    scan: Scan,
    gates: np.ndarray,
    cfg: FilterConfig,
    body: np.ndarray | None = None,
) -> np.ndarray:
    """Log of the gated scale-constraint factors, per particle.

    For each axis whose gate is open, the body-frame extrema of the scan
    are softly pinned to +-d_hat with variance ``r_scale``; a closed gate
    contributes exactly 0. ``d_hat`` comes from the predicted conditional
    mean. An empty scan contributes 0.
    """
    n = len(pset)
    if len(scan) == 0:
        return np.zeros(n)
    if body is None:
        body = body_frame_points(pset, scan.points)
    mn = body.min(axis=1)
    mx = body.max(axis=1)
    d_hat = predicted_half_lengths(pset)
    log_norm = 0.5 * (LOG_TWO_PI + np.log(cfg.r_scale))
    with np.errstate(invalid="ignore"):
        terms = (
            -0.5 * (mn + d_hat) ** 2 / cfg.r_scale
            - 0.5 * (mx - d_hat) ** 2 / cfg.r_scale
            - 2.0 * log_norm
        )
    return np.where(gates, terms, 0.0).sum(axis=1)


def _normalize_log_weights(log_w: np.ndarray) -> np.ndarray:
    m = np.max(log_w)
    if not np.isfinite(m):
        raise DegenerateFilterError("all particle weights vanished")
    shifted = log_w - m
    return shifted - np.log(np.sum(np.exp(shifted)))


def apply_positivity_rule(pset: ParticleSet) -> None:
    """Zero-weight hypotheses whose conditional mean (or exponent) is nonpositive.

    This is the same rule the weight update applies to the predicted means;
    applying it again right after a measurement update is idempotent with
    respect to the filter recursion (the conditional mean is unchanged by
    the time update), but keeps the reported posterior mixture on
    physically meaningful extents.
    """
    valid = (pset.mu > 0).all(axis=1) & (pset.q > 0)
    if valid.all():
        return
    log_w = pset.log_w.copy()
    log_w[~valid] = -np.inf
    pset.log_w = _normalize_log_weights(log_w)


def weight_update(
    pset: ParticleSet,
    scan: Scan,
    cfg: FilterConfig,
    gates: np.ndarray | None = None,
    g: np.ndarray | None = None,
    body: np.ndarray | None = None,
) -> None:
    """Bootstrap-proposal weight update with log-sum-exp normalization.

    Adds the pseudomeasurement log likelihood and the gated scale factors
    to the previous log weights (the proposal ratio is unity under the
    transition proposal), zeroes hypotheses with nonpositive predicted lam
    or q, and normalizes in place. Raises DegenerateFilterError when no
    weight survives.
    """
    valid = (pset.mu > 0).all(axis=1) & (pset.q > 0)
    log_w = pset.log_w.copy()
    if len(scan) > 0:
        if body is None:
            body = body_frame_points(pset, scan.points)
        if g is None:
            g = measurement_rows(pset, scan.points, body=body)
        if gates is None:
            gates = axis_gates(
                scan.sensor_pos, pset.phi, pset.c, gate_half_lengths(pset, cfg), cfg.margins
            )
        # At the very first update the conditional extent density is a vague
        # prior; treating the synthetic initial mean as certain makes the
        # pseudo factor collapse the particle set onto a single hypothesis.
        # Marginalizing that factor over the prior covariance leaves the
        # coarser scale factors to localize the pose while the unobserved
        # coordinates keep their diversity.
        first = cfg.first_update_marginalized and pset.updates_done == 0
        with np.errstate(invalid="ignore", over="ignore"):
            log_w = log_w + pseudo_log_likelihood(
                pset, scan, cfg, g=g, marginalized=True if first else None
            )
            log_w = log_w + scale_constraint_log_factor(pset, scan, gates, cfg, body=body)
    log_w[~valid] = -np.inf
    log_w[np.isnan(log_w)] = -np.inf
    pset.log_w = _normalize_log_weights(log_w)


def kf_measurement_update(
    pset: ParticleSet,
    scan: Scan,
    gates: np.ndarray,
    cfg: FilterConfig,
    g: np.ndarray | None = None,
) -> int:
    """Masked Kalman measurement update of (mu, Sigma), in place.

    With H the stacked measurement rows, S = H Sigma H.T + r I and the
    gain K = D Sigma H.T S^-1 masked by D = diag(b1, b2), the update is

        mu    <- mu + K (1 - H mu)
        Sigma <- Sigma - K S K.T

    evaluated through the algebraically identical 2x2 form
    Sigma H.T S^-1 = Sigma (r I + B Sigma)^-1 H.T with B = H.T H, which
    avoids forming the M x M innovation covariance. Particles whose gates
    are both closed are skipped entirely, leaving their mu and Sigma
    bitwise untouched. Sigma is re-symmetrized after the update. Returns
    the number of particles whose 2x2 system needed regularization.
    """
    if len(scan) == 0:
        return 0
    pset.updates_done += 1
    rows = np.flatnonzero(gates.any(axis=1))
    if rows.size == 0:
        return 0
    if g is None:
        g = measurement_rows(pset, scan.points)
    g = g[rows]
    p = pset.sigma[rows]
    mu = pset.mu[rows]
    mask = gates[rows].astype(float)

    b_mat = np.einsum("nmi,nmj->nij", g, g)
    u = g.sum(axis=1)
    m2 = cfg.r_pseudo * np.eye(2) + np.einsum("nij,njk->nik", b_mat, p)

    det = m2[:, 0, 0] * m2[:, 1, 1] - m2[:, 0, 1] * m2[:, 1, 0]
    bad = ~(np.abs(det) > 0.0) | ~np.isfinite(det)
    regularized = int(bad.sum())
    if regularized:
        m2[bad, 0, 0] += 1e-12
        m2[bad, 1, 1] += 1e-12
        det = m2[:, 0, 0] * m2[:, 1, 1] - m2[:, 0, 1] * m2[:, 1, 0]

    inv = np.empty_like(m2)
    inv[:, 0, 0] = m2[:, 1, 1]
    inv[:, 1, 1] = m2[:, 0, 0]
    inv[:, 0, 1] = -m2[:, 0, 1]
    inv[:, 1, 0] = -m2[:, 1, 0]
    inv /= det[:, None, None]

    p_inv = np.einsum("nij,njk->nik", p, inv)
    innov = u - np.einsum("nij,nj->ni", b_mat, mu)
    delta_mu = np.einsum("nij,nj->ni", p_inv, innov)
    shrink = np.einsum("nij,njk,nkl->nil", p_inv, b_mat, p)

    pset.mu[rows] = mu + mask * delta_mu
    sigma_new = p - (mask[:, :, None] * mask[:, None, :]) * shrink
    pset.sigma[rows] = 0.5 * (sigma_new + sigma_new.transpose(0, 2, 1))
    return regularized


def _reparameterize_conditional(pset: ParticleSet, q_old: np.ndarray, q_new: np.ndarray) -> None:
    """Re-express each conditional Gaussian in the new exponent's coordinates.

    The linear state lam = d**(-q) is exponent-relative: perturbing q while
    holding lam fixed silently rescales the implied half-lengths, which
    penalizes every exponent move and freezes shape adaptation. Mapping
    mu -> mu**(q_new/q_old) componentwise (covariance through the Jacobian)
    keeps the implied half-lengths invariant, so an exponent mutation is
    judged on shape fit alone. Hypotheses with nonpositive mu or exponent
    pass through untouched; the weight update rejects them anyway.
    """
    ok = (q_old > 0) & (q_new > 0) & (pset.mu > 0).all(axis=1)
    mu_safe = np.where(pset.mu > 0, pset.mu, 1.0)
    expo = np.where(ok, q_new / q_old, 1.0)[:, None]
    with np.errstate(over="ignore", divide="ignore"):
        mu_new = mu_safe ** expo
        jac = expo * mu_safe ** (expo - 1.0)
    ok &= np.isfinite(mu_new).all(axis=1) & np.isfinite(jac).all(axis=1)
    if not ok.any():
        return
    sigma_new = jac[:, :, None] * pset.sigma * jac[:, None, :]
    pset.mu[ok] = mu_new[ok]
    pset.sigma[ok] = sigma_new[ok]


def pf_sample(pset: ParticleSet, cfg: FilterConfig, rng: np.random.Generator) -> None:
    """Propagate the nonlinear states through the constant-velocity model.

    The centroid and velocity share one acceleration draw per particle, so
    their process noise is correlated exactly as the discretized model
    prescribes. In unknown-q mode the exponent performs a random walk
    (drawn first in the stream) and each conditional extent density is
    re-expressed in the mutated exponent's coordinates.
    """
    n = len(pset)
    t = cfg.T
    if cfg.unknown_q:
        q_new = pset.q + rng.normal(0.0, cfg.sigma_q, n)
        _reparameterize_conditional(pset, pset.q, q_new)
        pset.q = q_new
    pset.phi = pset.phi + rng.normal(0.0, cfg.sigma_phi, n)
    accel = rng.normal(0.0, cfg.sigma_a, (n, 2))
    pset.c = pset.c + t * pset.c_dot + 0.5 * t * t * accel
    pset.c_dot = pset.c_dot + t * accel


def kf_time_update(pset: ParticleSet, cfg: FilterConfig) -> None:
    """Random-walk time update of the conditional extent covariance."""
    var = cfg.sigma_lambda ** 2
    pset.sigma[:, 0, 0] += var
    pset.sigma[:, 1, 1] += var


def resample(pset: ParticleSet, rng) -> np.ndarray:
    """Systematic resampling with a single uniform draw; weights reset to 1/N.

    Conditional means and covariances are duplicated with their parent.
    Returns the selected parent indices so per-step caches can be gathered
    alongside. Zero-weight particles can never be selected.
    """
    n = len(pset)
    w = np.exp(pset.log_w)
    positions = (rng.random() + np.arange(n)) / n
    cum = np.cumsum(w)
    idx = np.searchsorted(cum, positions, side="right")
    idx = np.minimum(idx, n - 1)
    pset.take(idx)
    pset.log_w = np.full(n, -np.log(n))
    return idx


def estimate(pset: ParticleSet, cfg: FilterConfig) -> TrackEstimate:
    """Weighted posterior summary (orientation averaged on the circle)."""
    w = np.exp(pset.log_w)
    total = w.sum()
    if not np.isfinite(total) or abs(total - 1.0) > 1e-6:
        raise ValueError(f"estimate requires normalized weights, sum={total}")
    phi_hat = float(np.arctan2(w @ np.sin(pset.phi), w @ np.cos(pset.phi)))
    c_hat = w @ pset.c
    v_hat = w @ pset.c_dot
    lam_hat = w @ pset.mu
    q_hat = float(cfg.q_fixed) if not cfg.unknown_q else float(w @ pset.q)
    if not (np.all(lam_hat > 0) and q_hat > 0):
        raise DegenerateFilterError(
            f"posterior extent invalid: lam={lam_hat}, q={q_hat}"
        )
    d_hat = lam_hat ** (-1.0 / q_hat)
    extent = SuperellipseExtent(c=c_hat, phi=phi_hat, d=d_hat, q=q_hat)
    x_n = NonlinearState(
        phi=phi_hat, c=c_hat, c_dot=v_hat, q=q_hat if cfg.unknown_q else None
    )
    return TrackEstimate(x_n_hat=x_n, lam_hat=lam_hat, d_hat=d_hat, extent_hat=extent)


def step(
    pset: ParticleSet,
    scan: Scan,
    cfg: FilterConfig,
    rng: np.random.Generator,
) -> tuple[TrackEstimate, StepDiagnostics]:
    """Advance the filter by one scan and return the posterior summary.

    One step runs the recursion: weight update, normalization, systematic
    resampling, masked Kalman measurement update, kinematic sampling,
    Kalman time update. Because the measurement update is a deterministic
    per-particle map and resampling only duplicates rows, executing the
    update before drawing the resampling indices produces a bit-identical
    particle evolution; doing so lets the reported estimate pair the
    normalized weights with the updated conditional means exactly, with the
    positivity rule applied to the reported mixture, instead of averaging
    over the resampled copies.

    An empty scan degenerates to pure prediction: weights, mu and Sigma
    pass through the measurement stages unchanged.
    """
    t_start = time.perf_counter()
    n_points = len(scan)
    regularized = 0
    if n_points > 0:
        body = body_frame_points(pset, scan.points)
        g = measurement_rows(pset, scan.points, body=body)
        gates = axis_gates(
            scan.sensor_pos, pset.phi, pset.c, gate_half_lengths(pset, cfg), cfg.margins
        )
        weight_update(pset, scan, cfg, gates=gates, g=g, body=body)
        w = np.exp(pset.log_w)
        ess = float(1.0 / np.sum(w * w))
        gate_rates = gates.mean(axis=0)
        regularized = kf_measurement_update(pset, scan, gates, cfg, g=g)
        resample_log_w = pset.log_w
        apply_positivity_rule(pset)
        est = estimate(pset, cfg)
        pset.log_w = resample_log_w
        resample(pset, rng)
        if pset.velocity_prior is not None:
            # The first update's factors do not involve the velocity, so the
            # exact posterior keeps it independent of the pose with its prior
            # law; redrawing it breaks the spurious coupling that resampling
            # a velocity-blind weight would otherwise freeze in.
            v_mean, v_std = pset.velocity_prior
            pset.c_dot = v_mean + rng.normal(0.0, v_std, (len(pset), 2))
            pset.velocity_prior = None
    else:
        w = np.exp(pset.log_w)
        ess = float(1.0 / np.sum(w * w))
        gate_rates = np.zeros(2)
        est = estimate(pset, cfg)
    pf_sample(pset, cfg, rng)
    kf_time_update(pset, cfg)
    diag = StepDiagnostics(
        k=scan.k,
        n_points=n_points,
        ess=ess,
        gate_rates=np.asarray(gate_rates, dtype=float),
        wall_time=time.perf_counter() - t_start,
        regularized=regularized,
    )
    return est, diag
