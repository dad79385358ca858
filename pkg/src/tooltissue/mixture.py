"""Time-conditioned Gaussian mixture over [t, x_rel, y_rel, theta_rel].

Training is classic EM with seeded k-means++ initialization and an
eigenvalue floor on every covariance update. Prediction conditions the
joint on time: positions come from Gaussian mixture regression, the
orientation from a shortest-arc blend of the two dominant components'
conditional angle means.

Data are standardized per dimension before EM (pixels and normalized time
differ by about two orders of magnitude) and the fitted parameters are
mapped back to raw units, so callers never see the standardized space.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError, NumericalCollapse, TooFewPoints
from .geometry import shortest_angle_diff
from .cluster import lloyd

DIMS = 4  # column order: time, x_rel, y_rel, theta_rel
_LOG_2PI = np.log(2.0 * np.pi)
_DEATH_THRESHOLD = 1e-12


@dataclass(frozen=True)
class TrainDiagnostics:
    """Bookkeeping from an EM run (not serialized with the model)."""

    loglik_history: tuple
    iterations: int
    converged: bool
    floor_hits: int
    restart_logliks: tuple
    selected_restart: int
    reseeded_components: int


@dataclass(frozen=True)
class MixtureModel:
    """Trained mixture parameters: priors, 4-D means, 4x4 covariances."""

    priors: np.ndarray       # (N,)
    means: np.ndarray        # (N, 4)
    covariances: np.ndarray  # (N, 4, 4)
    diagnostics: TrainDiagnostics | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        p = np.array(self.priors, dtype=float).reshape(-1)
        m = np.array(self.means, dtype=float).reshape(len(p), DIMS)
        c = np.array(self.covariances, dtype=float).reshape(len(p), DIMS, DIMS)
        for arr in (p, m, c):
            arr.setflags(write=False)
        object.__setattr__(self, "priors", p)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "covariances", c)

    @property
    def n_components(self) -> int:
        return len(self.priors)

    def validate(self, floor: float = 0.0, tol: float = 1e-9) -> None:
        """Raise DomainError if the mixture invariants do not hold."""
        if np.any(self.priors < -tol):
            raise DomainError("negative mixture prior")
        if abs(float(self.priors.sum()) - 1.0) > tol:
            raise DomainError(f"priors sum to {self.priors.sum()!r}, not 1")
        asym = np.max(np.abs(self.covariances - np.transpose(self.covariances, (0, 2, 1))))
        if asym > tol:
            raise DomainError(f"covariance asymmetry {asym:g} exceeds {tol:g}")
        min_eig = float(np.min(np.linalg.eigvalsh(self.covariances)))
        if min_eig < floor - tol:
            raise DomainError(f"covariance eigenvalue {min_eig:g} below floor {floor:g}")


@dataclass(frozen=True)
class TrainConfig:
    """EM hyperparameters. ``N`` is a component count or (lo, hi) range."""

    N: int | tuple | None = None
    max_iters: int = 500
    loglik_tol: float = 1e-6
    floor: float = 1e-6
    seed: int = 0
    restarts: int = 5

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.floor <= 0.0:
            raise ConfigError("covariance floor must be > 0")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.loglik_tol < 0.0:
            raise ConfigError("loglik_tol must be >= 0")
        if isinstance(self.N, (int, np.integer)) and self.N < 1:
            raise ConfigError("component count must be >= 1")


@dataclass(frozen=True)
class PosePrediction:
    """GMR output at one query time."""

    time: float
    position_mean: np.ndarray        # (2,) pixels
    position_covariance: np.ndarray  # (2, 2) pixels^2
    angle: float                     # radians (not re-wrapped; see module doc)
    responsibilities: np.ndarray     # (N,), sums to 1
    extrapolated: bool

    def __post_init__(self):
        pm = np.array(self.position_mean, dtype=float).reshape(2)
        pc = np.array(self.position_covariance, dtype=float).reshape(2, 2)
        h = np.array(self.responsibilities, dtype=float).reshape(-1)
        for arr in (pm, pc, h):
            arr.setflags(write=False)
        object.__setattr__(self, "position_mean", pm)
        object.__setattr__(self, "position_covariance", pc)
        object.__setattr__(self, "responsibilities", h)


def as_training_array(data) -> np.ndarray:
    """Stack datapoints (or pass through an (n, 4) array) as float64."""
    if isinstance(data, np.ndarray):
        arr = np.asarray(data, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != DIMS:
            raise DomainError(f"training array must be (n, {DIMS}), got {arr.shape}")
        return arr
    rows = [(d.time, d.rel_position[0], d.rel_position[1], d.rel_angle) for d in data]
    if not rows:
        return np.empty((0, DIMS))
    return np.array(rows, dtype=float)


# --------------------------------------------------------------------------
# EM training
# --------------------------------------------------------------------------

def _log_weights(Z, priors, means, covs):
    """Per-point joint log densities log(prior_k) + log N(z; mu_k, S_k).

    Returns (logw, ll_points) with logw of shape (n, N) and the per-point
    log-likelihood logsumexp(logw, axis=1).
    """
    vals, vecs = np.linalg.eigh(covs)
    vals = np.maximum(vals, 1e-300)
    logdet = np.sum(np.log(vals), axis=1)                      # (N,)
    diff = Z[None, :, :] - means[:, None, :]                   # (N, n, D)
    y = np.einsum("kji,knj->kni", vecs, diff)                  # V^T diff
    quad = np.einsum("kni,ki->kn", y ** 2, 1.0 / vals)         # (N, n)
    logp = -0.5 * (DIMS * _LOG_2PI + logdet[:, None] + quad)   # (N, n)
    logw = logp.T + np.log(np.maximum(priors, 1e-300))[None, :]
    m = logw.max(axis=1)
    ll_points = m + np.log(np.sum(np.exp(logw - m[:, None]), axis=1))
    return logw, ll_points


def _floor_covariances(covs, floor):
    """Clamp covariance eigenvalues from below; returns (covs, clamped?)."""
    vals, vecs = np.linalg.eigh(covs)
    hit = bool(np.any(vals < floor))
    if hit:
        vals = np.maximum(vals, floor)
        covs = np.einsum("kij,kj,klj->kil", vecs, vals, vecs)
    covs = 0.5 * (covs + np.transpose(covs, (0, 2, 1)))
    return covs, hit


def _m_step(Z, resp, floor):
    n = Z.shape[0]
    nk = np.maximum(resp.sum(axis=0), 1e-300)                  # (N,)
    priors = nk / n
    priors = priors / priors.sum()
    means = (resp.T @ Z) / nk[:, None]
    diff = Z[None, :, :] - means[:, None, :]                   # (N, n, D)
    covs = np.einsum("nk,kni,knj->kij", resp, diff, diff) / nk[:, None, None]
    covs = 0.5 * (covs + np.transpose(covs, (0, 2, 1)))
    return (*_floor_covariances(covs, floor), priors, means)


class _EmRun:
    __slots__ = ("priors", "means", "covs", "history", "floor_hits",
                 "converged", "reseeds")


def _em_run(Z, N, config, rng):
    """One seeded EM run in standardized coordinates."""
    n = Z.shape[0]
    centers, labels, _ = lloyd(Z, N, rng, on_empty="farthest")
    eye = np.eye(DIMS)
    priors = np.empty(N)
    means = np.empty((N, DIMS))
    covs = np.empty((N, DIMS, DIMS))
    for c in range(N):
        members = Z[labels == c]
        priors[c] = len(members) / n
        means[c] = members.mean(axis=0)
        d = members - means[c]
        covs[c] = d.T @ d / len(members) + config.floor * eye

    run = _EmRun()
    run.history = []
    run.floor_hits = 0
    run.reseeds = 0
    run.converged = False
    low_count = np.zeros(N, dtype=int)
    reseeded = np.zeros(N, dtype=bool)
    prev_ll = -np.inf
    passes = 0
    # Reseeding a dead component consumes an extra pass; allow for them.
    max_passes = config.max_iters + N + 1
    while passes < max_passes:
        passes += 1
        logw, ll_points = _log_weights(Z, priors, means, covs)
        resp = np.exp(logw - ll_points[:, None])
        ll = float(ll_points.sum())
        run.history.append(ll)

        col = resp.sum(axis=0)
        low = col < _DEATH_THRESHOLD
        low_count = np.where(low, low_count + 1, 0)
        dead = np.flatnonzero(low_count >= 2)
        if dead.size:
            for c in dead:
                if reseeded[c]:
                    raise NumericalCollapse(
                        f"mixture component {int(c)} died again after re-seeding")
                reseeded[c] = True
                run.reseeds += 1
                # Park the dead component on the worst-explained point.
                means[c] = Z[int(np.argmin(ll_points))]
                covs[c] = np.cov(Z.T, bias=True).reshape(DIMS, DIMS) + config.floor * eye
                priors[c] = 1.0 / N
                low_count[c] = 0
            priors = priors / priors.sum()
            prev_ll = -np.inf
            continue

        improvement = (ll - prev_ll) / max(abs(prev_ll), 1e-12)
        if np.isfinite(prev_ll) and improvement < config.loglik_tol:
            run.converged = True
            break
        if len(run.history) > config.max_iters:
            break
        prev_ll = ll
        covs, hit, priors, means = _m_step(Z, resp, config.floor)
        run.floor_hits += int(hit)

    run.priors, run.means, run.covs = priors, means, covs
    return run


def em_train(data, config: TrainConfig) -> MixtureModel:
    """Fit a mixture by EM; returns the best of ``config.restarts`` runs.

    Each restart draws its k-means++ initialization from a generator seeded
    with (config.seed, restart index), so results are reproducible
    bit-for-bit. The log-likelihood recorded in the diagnostics is in raw
    (unstandardized) units and is non-decreasing across iterations except
    where the covariance floor projection was active.
    """
    X = as_training_array(data)
    n = X.shape[0]
    if not isinstance(config.N, (int, np.integer)):
        raise ConfigError(f"em_train needs a concrete component count, got {config.N!r}")
    N = int(config.N)
    if n < N:
        raise TooFewPoints(f"{n} datapoints cannot support {N} components")
    if not np.all(np.isfinite(X)):
        raise DomainError("training data contain non-finite values")

    shift = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < 1e-12] = 1.0
    Z = (X - shift) / scale
    ll_shift = -n * float(np.sum(np.log(scale)))  # log p_raw = log p_std + ll_shift

    best = None
    best_idx = 0
    restart_lls = []
    for r in range(config.restarts):
        rng = np.random.default_rng([config.seed, r])
        run = _em_run(Z, N, config, rng)
        restart_lls.append(run.history[-1] + ll_shift)
        if best is None or run.history[-1] > best.history[-1]:
            best = run
            best_idx = r

    means_raw = shift + scale * best.means
    covs_raw = best.covs * np.outer(scale, scale)[None, :, :]
    covs_raw, raw_hit = _floor_covariances(covs_raw, config.floor)

    diagnostics = TrainDiagnostics(
        loglik_history=tuple(h + ll_shift for h in best.history),
        iterations=len(best.history),
        converged=best.converged,
        floor_hits=best.floor_hits + int(raw_hit),
        restart_logliks=tuple(restart_lls),
        selected_restart=best_idx,
        reseeded_components=best.reseeds,
    )
    return MixtureModel(best.priors, means_raw, covs_raw, diagnostics)


def _bic_sweep(data, n_range, config: TrainConfig):
    ns = sorted({int(v) for v in n_range})
    if not ns:
        raise ConfigError("component range is empty")
    X = as_training_array(data)
    if ns[0] < 1:
        raise ConfigError("component counts must be >= 1")
    if ns[-1] > X.shape[0]:
        raise TooFewPoints(
            f"largest candidate N={ns[-1]} exceeds {X.shape[0]} datapoints")
    log_n = np.log(X.shape[0])
    best_n, best_model, best_bic = None, None, np.inf
    table = []
    for N in ns:
        model = em_train(X, replace(config, N=N))
        ll = model.diagnostics.loglik_history[-1]
        params = N * (1 + DIMS + DIMS * (DIMS + 1) // 2) - 1
        bic = -2.0 * ll + params * log_n
        table.append((N, ll, bic))
        if bic < best_bic:
            best_n, best_model, best_bic = N, model, bic
    return best_n, best_model, table


def select_components(data, n_range, config: TrainConfig) -> int:
    """Pick the component count in ``n_range`` minimizing BIC."""
    best_n, _, _ = _bic_sweep(data, n_range, config)
    return best_n


def train_with_selection(data, config: TrainConfig):
    """Train with a fixed N, or sweep a (lo, hi) range and keep the BIC winner.

    Returns (model, chosen_n, table) where table is None when no sweep ran.
    """
    if isinstance(config.N, (int, np.integer)):
        return em_train(data, config), int(config.N), None
    if isinstance(config.N, tuple) and len(config.N) == 2:
        lo, hi = config.N
        best_n, model, table = _bic_sweep(data, range(int(lo), int(hi) + 1), config)
        return model, best_n, table
    raise ConfigError(f"cannot interpret component specification {config.N!r}")


# --------------------------------------------------------------------------
# Prediction
# --------------------------------------------------------------------------

def _time_responsibilities(model: MixtureModel, t: float) -> np.ndarray:
    mu_t = model.means[:, 0]
    var_t = model.covariances[:, 0, 0]
    logw = np.log(np.maximum(model.priors, 1e-300)) - 0.5 * (
        _LOG_2PI + np.log(var_t) + (t - mu_t) ** 2 / var_t)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def _conditional(model: MixtureModel, t: float):
    """Per-component linear-Gaussian conditionals of (x, y, theta) given t."""
    mu_t = model.means[:, 0]
    var_t = model.covariances[:, 0, 0]
    gain = (t - mu_t) / var_t                                   # (N,)
    cross_pos = model.covariances[:, 1:3, 0]                    # (N, 2)
    cross_ang = model.covariances[:, 3, 0]                      # (N,)
    pos_means = model.means[:, 1:3] + cross_pos * gain[:, None]
    pos_covs = model.covariances[:, 1:3, 1:3] - (
        np.einsum("ki,kj->kij", cross_pos, cross_pos) / var_t[:, None, None])
    ang_means = model.means[:, 3] + cross_ang * gain
    return pos_means, pos_covs, ang_means


def _blend_orientation(h, cond_angles, time_means) -> float:
    """Shortest-arc blend of the two dominant components' angle conditionals.

    The pair is ordered by time-mean so the interpolation runs from the
    earlier component toward the later one. The result is left unwrapped
    (congruent to the wrapped value mod 2*pi): training angles are an
    unwrapped signal, and wrapping here would put an artificial seam at
    +/-pi. Serialization is where angles get wrapped.
    """
    order = np.argsort(-h, kind="stable")
    top = int(order[0])
    if len(h) == 1 or h[top] > 1.0 - 1e-6:
        return float(cond_angles[top])
    i, j = top, int(order[1])
    if (time_means[j], j) < (time_means[i], i):
        i, j = j, i
    s = h[j] / (h[i] + h[j])
    return float(cond_angles[i] + s * shortest_angle_diff(cond_angles[i], cond_angles[j]))


def gmr(model: MixtureModel, t: float) -> PosePrediction:
    """Condition the mixture on time ``t``.

    Responsibilities come from the components' time marginals; the position
    is the responsibility-weighted blend of the per-component conditional
    means, with the law-of-total-variance covariance. Times outside [0, 1]
    are allowed but flagged as extrapolation.
    """
    t = float(t)
    if not np.isfinite(t):
        raise DomainError("query time must be finite")
    h = _time_responsibilities(model, t)
    pos_means, pos_covs, ang_means = _conditional(model, t)
    mean = h @ pos_means
    second = np.einsum("k,kij->ij",
                       h, pos_covs + np.einsum("ki,kj->kij", pos_means, pos_means))
    cov = second - np.outer(mean, mean)
    cov = 0.5 * (cov + cov.T)
    angle = _blend_orientation(h, ang_means, model.means[:, 0])
    return PosePrediction(
        time=t,
        position_mean=mean,
        position_covariance=cov,
        angle=angle,
        responsibilities=h,
        extrapolated=not (0.0 <= t <= 1.0),
    )


def predict_orientation(model: MixtureModel, t: float) -> float:
    """Orientation at time ``t``: see ``_blend_orientation`` for the scheme."""
    t = float(t)
    if not np.isfinite(t):
        raise DomainError("query time must be finite")
    h = _time_responsibilities(model, t)
    _, _, ang_means = _conditional(model, t)
    return _blend_orientation(h, ang_means, model.means[:, 0])


def predict_trajectory(model: MixtureModel, times) -> list:
    """GMR pose predictions at ascending query times."""
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise DomainError("query times must be sorted ascending")
    return [gmr(model, t) for t in times]
