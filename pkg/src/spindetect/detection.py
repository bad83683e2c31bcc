"""Decision making on homodyne records.

Two discriminators tell "spin present" from "no spin":

* the integrated-signal test: the record is integrated, normalized by
  sqrt(t) into zeta(t), and compared against the midpoint of the two
  hypothesis means (closed-form error probability available), and
* the Bayesian dual filter: a conditioned spin-model filter and the
  stateless no-spin model each predict the next record increment; their
  Gaussian increment likelihoods are accumulated in log domain into the
  posterior spin probability.

The Monte Carlo ensemble engine generates matched spin/no-spin record pairs
(shared Wiener noise per trial) and runs both discriminators on both arms in
one fused pass, without storing records, accumulating error-vs-time curves
and histogram snapshots.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, expit

from .dynamics import (
    BatchEffectiveStepper,
    HomodyneRecord,
    ModelParams,
    check_sme_dt,
    default_sample_stride,
    measurement_scalars,
    output_noise_integral,
    steady_sigma_minus,
    POSITIVITY_FLOOR,
)
from .errors import NumericalFailure
from .numerics import GaussianStream

__all__ = [
    "IntegratedSignal",
    "integrate_signal",
    "signal_means",
    "threshold_value",
    "threshold_classify",
    "analytic_error",
    "zeta_variances",
    "corrected_error",
    "PosteriorTrace",
    "bayes_filter",
    "SnapshotStats",
    "EnsembleStats",
    "run_ensemble",
    "error_crossing_time",
    "bayes_speedup",
]

#: Steps per noise block in the fused ensemble engine.
ENSEMBLE_BLOCK = 512

#: Hard cap on stored sample points per ensemble run (memory bound).
MAX_ENSEMBLE_SAMPLES = 2048


# --------------------------------------------------------------------------
# Integrated-signal discriminator
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegratedSignal:
    """The normalized running integral zeta(t) = (1/sqrt(t)) integral dY."""

    times: np.ndarray
    zeta: np.ndarray


def integrate_signal(record: HomodyneRecord, sample_times=None) -> IntegratedSignal:
    """Normalized integrated signal of one record at the requested times.

    Args:
        record: the homodyne record.
        sample_times: times (s) at which to evaluate; they are snapped to
            increment boundaries.  Default: every increment boundary.
            t = 0 is excluded (the normalization is singular there).

    Raises:
        ValueError: for an empty record, or sample times outside (0, duration].
    """
    n = len(record.increments)
    if n == 0:
        raise ValueError("record is empty")
    cum = np.cumsum(record.increments)
    if sample_times is None:
        idx = np.arange(1, n + 1)
    else:
        t = np.atleast_1d(np.asarray(sample_times, dtype=float))
        idx = np.round(t / record.dt).astype(int)
        if np.any(idx < 1) or np.any(idx > n):
            raise ValueError(
                f"sample times must lie in (0, {n * record.dt:.6e}] s "
                f"(got range [{t.min():.6e}, {t.max():.6e}])"
            )
    times = idx * record.dt
    return IntegratedSignal(times=times, zeta=cum[idx - 1] / np.sqrt(times))


def signal_means(p: ModelParams, t) -> tuple:
    """Analytic ensemble means of zeta(t) for the two hypotheses.

    Both are eta * <c_m + c_m^dag> * sqrt(t) with the spin branch evaluated
    at the driven steady state.

    Returns:
        (mu_nospin, mu_spin), arrays matching the shape of ``t``.
    """
    t = np.asarray(t, dtype=float)
    c0, c1 = measurement_scalars(p)
    x0 = 2.0 * c0.real
    x_spin = x0 + 2.0 * (c1 * steady_sigma_minus(p)).real
    return p.eta * x0 * np.sqrt(t), p.eta * x_spin * np.sqrt(t)


def threshold_value(p: ModelParams, t) -> np.ndarray:
    """Decision threshold zeta_c(t): midpoint of the two hypothesis means."""
    mu0, mu1 = signal_means(p, t)
    return 0.5 * (mu0 + mu1)


def threshold_classify(zeta_value: float, zeta_c: float, delta_mu: float) -> bool:
    """Integrated-signal decision: True means "spin present".

    ``delta_mu`` is the spin-minus-nospin mean difference, which orients the
    test (a spin that absorbs lowers the mean, so spin lies *below* the
    threshold).  Exactly on the threshold (or with no separation at all) the
    tie breaks to "no spin".
    """
    if delta_mu < 0:
        return zeta_value < zeta_c
    if delta_mu > 0:
        return zeta_value > zeta_c
    return False


def analytic_error(t, tau_1: float, eta: float):
    """Closed-form error probability of the midpoint threshold test.

    eps_eta(t) = (1/2) [1 - erf( sqrt(eta)/(2 sqrt(2)) * sqrt(t/tau_1) )];
    it starts at 1/2, decreases monotonically, and depends on (t, eta) only
    through the product eta*t.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    if tau_1 <= 0:
        raise ValueError("tau_1 must be positive")
    if not 0 < eta <= 1:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    return 0.5 * (1.0 - erf(np.sqrt(eta) / (2.0 * np.sqrt(2.0)) * np.sqrt(t / tau_1)))


def zeta_variances(p: ModelParams) -> tuple:
    """Long-time variances of zeta(t) under the two hypotheses.

    The empty-cavity record is pure shot noise with variance eta; the spin
    record adds the quantum-regression excess S of the spin's emission,

        (var_nospin, var_spin) = (eta, eta (1 + eta S)).

    The idealized error curve (``analytic_error``) assumes both equal eta,
    so it is a lower bound whenever S > 0; ``corrected_error`` accounts for
    the excess.
    """
    s = output_noise_integral(p)
    return p.eta, p.eta * (1.0 + p.eta * s)


def corrected_error(t, p: ModelParams) -> np.ndarray:
    """Threshold-test error with the spin arm's true long-time variance.

    Same Gaussian midpoint test as ``analytic_error``, but the spin arm
    uses eta (1 + eta S) instead of eta.  Valid for t >> 1/gamma_2 (the
    variance excess needs a few correlation times to saturate).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    var0, var1 = zeta_variances(p)
    mu0, mu1 = signal_means(p, t)
    half_sep = 0.5 * np.abs(mu1 - mu0)
    err0 = 0.5 * (1.0 - erf(half_sep / np.sqrt(2.0 * var0)))
    err1 = 0.5 * (1.0 - erf(half_sep / np.sqrt(2.0 * var1)))
    return 0.5 * (err0 + err1)


# --------------------------------------------------------------------------
# Bayesian dual filter
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PosteriorTrace:
    """Posterior spin probability along one record.

    ``log_likelihood_spin``/``log_likelihood_nospin`` are the accumulated
    Gaussian increment log likelihoods of each hypothesis (log-domain, so no
    underflow); ``p_spin[0]`` equals the prior at t = 0.
    """

    times: np.ndarray
    p_spin: np.ndarray
    log_likelihood_spin: np.ndarray
    log_likelihood_nospin: np.ndarray
    prior: float


def bayes_filter(
    record: HomodyneRecord,
    p: ModelParams,
    prior: float = 0.5,
    sample_stride: int | None = None,
) -> PosteriorTrace:
    """Run the two-hypothesis Bayesian filter over a record.

    The spin hypothesis is propagated as a conditioned SME driven by the
    record (innovation form); the no-spin hypothesis predicts the constant
    bare-reflection mean and needs no state.  Each step multiplies the
    posterior odds by the ratio of Gaussian increment likelihoods
    N(dY; m_i, eta dt).

    Returns:
        PosteriorTrace sampled every ``sample_stride`` steps (default: the
        dynamics sampling cadence), including the t = 0 prior point.
    """
    if not 0.0 < prior < 1.0:
        raise ValueError(f"prior must be in (0, 1), got {prior}")
    if record.params_hash != p.params_hash():
        warnings.warn(
            "record was generated with different model parameters; the filter "
            "is evaluating a mismatched model",
            stacklevel=2,
        )
    dt = record.dt
    check_sme_dt(p, dt)
    n_steps = len(record.increments)
    if sample_stride is None:
        sample_stride = default_sample_stride(p, dt)
    sample_idx = np.arange(sample_stride, n_steps + 1, sample_stride)

    eta = p.eta
    sqrt_eta = math.sqrt(eta)
    stepper = BatchEffectiveStepper(p, dt, 1)
    x0 = stepper.x0
    m0 = eta * x0 * dt
    var = eta * dt
    log_norm = -0.5 * math.log(2.0 * math.pi * var)
    logit_prior = math.log(prior / (1.0 - prior))

    times = np.empty(len(sample_idx) + 1)
    p_spin = np.empty(len(sample_idx) + 1)
    ll_spin = np.empty(len(sample_idx) + 1)
    ll_nospin = np.empty(len(sample_idx) + 1)
    times[0], p_spin[0], ll_spin[0], ll_nospin[0] = 0.0, prior, 0.0, 0.0

    acc_spin = 0.0
    acc_nospin = 0.0
    pos = 0
    for k in range(n_steps):
        dy = record.increments[k]
        m_s = eta * (x0 + stepper.x_tilde()[0]) * dt
        acc_spin += log_norm - (dy - m_s) ** 2 / (2.0 * var)
        acc_nospin += log_norm - (dy - m0) ** 2 / (2.0 * var)
        if not (np.isfinite(acc_spin) and np.isfinite(acc_nospin)):
            raise NumericalFailure(
                f"non-finite log likelihood at step {k} (dY = {dy!r})"
            )
        z = (dy - m0) / sqrt_eta
        stepper.step(np.array([z]))
        if pos < len(sample_idx) and sample_idx[pos] == k + 1:
            times[pos + 1] = (k + 1) * dt
            p_spin[pos + 1] = expit(acc_spin - acc_nospin + logit_prior)
            ll_spin[pos + 1] = acc_spin
            ll_nospin[pos + 1] = acc_nospin
            pos += 1
    return PosteriorTrace(
        times=times,
        p_spin=p_spin,
        log_likelihood_spin=ll_spin,
        log_likelihood_nospin=ll_nospin,
        prior=prior,
    )


# --------------------------------------------------------------------------
# Fused Monte Carlo ensemble
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SnapshotStats:
    """Per-trial discriminator values captured at one sample time."""

    time: float
    zeta_spin: np.ndarray
    zeta_nospin: np.ndarray
    posterior_spin: np.ndarray
    posterior_nospin: np.ndarray
    alive: np.ndarray


@dataclass(frozen=True)
class EnsembleStats:
    """Aggregated two-hypothesis Monte Carlo results.

    Error curves are symmetric-prior error probabilities: the mean of the
    miss rate (spin records judged empty) and the false-alarm rate (empty
    records judged occupied) among trials still alive at each time.
    """

    params_hash: str
    eta: float
    tau_1: float
    dt: float
    duration: float
    trials: int
    master_seed: int
    prior: float
    times: np.ndarray
    alive_counts: np.ndarray
    zeta_mean_spin: np.ndarray
    zeta_var_spin: np.ndarray
    zeta_mean_nospin: np.ndarray
    zeta_var_nospin: np.ndarray
    error_threshold: np.ndarray
    error_threshold_analytic: np.ndarray
    error_bayes: np.ndarray
    snapshots: tuple
    excluded: int

    @property
    def separation(self) -> np.ndarray:
        """|mean zeta difference| between the hypotheses at each time."""
        return np.abs(self.zeta_mean_spin - self.zeta_mean_nospin)

    def error_band(self, errors: np.ndarray, z: float = 1.96) -> tuple:
        """Normal-approximation binomial bands around an error curve.

        Each time point pools the two arms, so the count is 2 x alive.
        """
        n = np.maximum(2 * self.alive_counts, 1)
        half = z * np.sqrt(np.clip(errors * (1.0 - errors), 0.0, None) / n)
        return np.clip(errors - half, 0.0, 1.0), np.clip(errors + half, 0.0, 1.0)


def _masked_moments(values: np.ndarray, alive: np.ndarray) -> tuple:
    n = max(int(alive.sum()), 1)
    masked = np.where(alive, values, 0.0)
    mean = masked.sum() / n
    var = (np.where(alive, (values - mean) ** 2, 0.0)).sum() / max(n - 1, 1)
    return mean, var


def run_ensemble(
    p: ModelParams,
    trials: int,
    duration: float,
    dt: float,
    master_seed: int,
    snapshot_times=None,
    prior: float = 0.5,
    sample_stride: int | None = None,
) -> EnsembleStats:
    """Generate matched spin/no-spin record pairs and score both discriminators.

    Per trial, one Wiener path drives both hypotheses (matched pairs), the
    spin arm via the conditioned SME from the driven steady state.  The
    Bayesian filter for the spin arm coincides with its generator (same
    record, same model), so one extra conditioned state per trial — the spin
    filter on the no-spin record — completes both posteriors.  Nothing is
    stored per step; trials advance in lockstep as (trials,)-shaped array ops.

    Trials whose sampled state dips below the positivity floor are excluded
    from that time onward; more than 1% exclusions aborts the run.

    Args:
        snapshot_times: times at which full per-trial histograms are kept
            (default: {0.2, 0.4, 2, 4, 6, 12} tau_1 plus the final time).
    """
    if trials < 100:
        raise ValueError(f"at least 100 trials are needed for error curves, got {trials}")
    if not 0.0 < prior < 1.0:
        raise ValueError(f"prior must be in (0, 1), got {prior}")
    if duration <= 0:
        raise ValueError("duration must be positive")
    check_sme_dt(p, dt)

    n_steps = int(round(duration / dt))
    if sample_stride is None:
        sample_stride = default_sample_stride(p, dt)
    sample_stride = max(sample_stride, int(np.ceil(n_steps / MAX_ENSEMBLE_SAMPLES)))
    sample_idx = np.arange(sample_stride, n_steps + 1, sample_stride)
    n_samples = len(sample_idx)

    tau_1 = p.tau_1
    if snapshot_times is None:
        snapshot_times = [f * tau_1 for f in (0.2, 0.4, 2.0, 4.0, 6.0, 12.0)]
    snapshot_steps = sorted(
        {
            int(sample_idx[np.argmin(np.abs(sample_idx * dt - t))])
            for t in snapshot_times
            if 0 < t <= duration + dt
        }
        | {int(sample_idx[-1])}
    )

    eta = p.eta
    sqrt_eta = math.sqrt(eta)
    gen = BatchEffectiveStepper(p, dt, trials)
    fil_b = BatchEffectiveStepper(p, dt, trials)
    x0 = gen.x0
    m0 = eta * x0 * dt
    var = eta * dt
    logit_prior = math.log(prior / (1.0 - prior))

    c0, c1 = measurement_scalars(p)
    x_spin_ss = x0 + 2.0 * (c1 * steady_sigma_minus(p)).real
    delta_mu_sign = np.sign(x_spin_ss - x0)
    if delta_mu_sign == 0:
        warnings.warn("zero analytic separation: the threshold test is blind",
                      stacklevel=2)

    streams = [GaussianStream.for_trial(master_seed, k) for k in range(trials)]

    y_a = np.zeros(trials)
    y_b = np.zeros(trials)
    dl_a = np.zeros(trials)
    dl_b = np.zeros(trials)
    alive = np.ones(trials, dtype=bool)

    alive_counts = np.empty(n_samples, dtype=int)
    zeta_mean_a = np.empty(n_samples)
    zeta_var_a = np.empty(n_samples)
    zeta_mean_b = np.empty(n_samples)
    zeta_var_b = np.empty(n_samples)
    err_thr = np.empty(n_samples)
    err_bay = np.empty(n_samples)
    snapshots = []

    step = 0
    pos = 0
    dw_block = None
    while step < n_steps:
        block = min(ENSEMBLE_BLOCK, n_steps - step)
        if dw_block is None or dw_block.shape[1] != block:
            dw_block = np.empty((trials, block))
        for k, s in enumerate(streams):
            dw_block[k] = s.increments(dt, block)
        for j in range(block):
            dw = dw_block[:, j]
            x_a = x0 + gen.x_tilde()
            dy_a = eta * x_a * dt + sqrt_eta * dw
            dy_b = m0 + sqrt_eta * dw
            m_sa = eta * x_a * dt
            m_sb = eta * (x0 + fil_b.x_tilde()) * dt
            dl_a += ((dy_a - m0) ** 2 - (dy_a - m_sa) ** 2) / (2.0 * var)
            dl_b += ((dy_b - m0) ** 2 - (dy_b - m_sb) ** 2) / (2.0 * var)
            gen.step((dy_a - m0) / sqrt_eta)
            fil_b.step((dy_b - m0) / sqrt_eta)
            y_a += dy_a
            y_b += dy_b
            step += 1

            if pos < n_samples and sample_idx[pos] == step:
                t = step * dt
                lam = np.minimum(gen.min_eigenvalue(), fil_b.min_eigenvalue())
                alive &= lam >= POSITIVITY_FLOOR
                n_alive = int(alive.sum())
                if n_alive == 0:
                    raise NumericalFailure("all trials lost positivity")
                sqrt_t = math.sqrt(t)
                zeta_a = y_a / sqrt_t
                zeta_b = y_b / sqrt_t
                zeta_c = eta * (x0 + 0.5 * (x_spin_ss - x0)) * dt * step / sqrt_t
                if delta_mu_sign < 0:
                    wrong_a = zeta_a >= zeta_c
                    wrong_b = zeta_b < zeta_c
                else:
                    wrong_a = zeta_a <= zeta_c
                    wrong_b = zeta_b > zeta_c
                p_a = expit(dl_a + logit_prior)
                p_b = expit(dl_b + logit_prior)
                alive_counts[pos] = n_alive
                zeta_mean_a[pos], zeta_var_a[pos] = _masked_moments(zeta_a, alive)
                zeta_mean_b[pos], zeta_var_b[pos] = _masked_moments(zeta_b, alive)
                err_thr[pos] = (
                    (wrong_a & alive).sum() + (wrong_b & alive).sum()
                ) / (2.0 * n_alive)
                err_bay[pos] = (
                    ((p_a <= 0.5) & alive).sum() + ((p_b > 0.5) & alive).sum()
                ) / (2.0 * n_alive)
                if step in snapshot_steps:
                    snapshots.append(
                        SnapshotStats(
                            time=t,
                            zeta_spin=zeta_a.copy(),
                            zeta_nospin=zeta_b.copy(),
                            posterior_spin=p_a.copy(),
                            posterior_nospin=p_b.copy(),
                            alive=alive.copy(),
                        )
                    )
                pos += 1

    excluded = trials - int(alive.sum())
    if excluded > 0.01 * trials:
        raise NumericalFailure(
            f"{excluded}/{trials} trials excluded for positivity failures "
            "(more than the 1% budget)"
        )
    times = sample_idx * dt
    return EnsembleStats(
        params_hash=p.params_hash(),
        eta=eta,
        tau_1=tau_1,
        dt=dt,
        duration=n_steps * dt,
        trials=trials,
        master_seed=int(master_seed),
        prior=prior,
        times=times,
        alive_counts=alive_counts,
        zeta_mean_spin=zeta_mean_a,
        zeta_var_spin=zeta_var_a,
        zeta_mean_nospin=zeta_mean_b,
        zeta_var_nospin=zeta_var_b,
        error_threshold=err_thr,
        error_threshold_analytic=np.asarray(analytic_error(times, tau_1, eta)),
        error_bayes=err_bay,
        snapshots=tuple(snapshots),
        excluded=excluded,
    )


# --------------------------------------------------------------------------
# Error-level crossing times and the Bayesian speedup
# --------------------------------------------------------------------------

def error_crossing_time(
    times: np.ndarray,
    errors: np.ndarray,
    level: float,
    window: int = 15,
) -> float:
    """First time a (smoothed) error curve reaches ``level``.

    The curve is smoothed by a centered moving average of ``window`` samples
    (edges use the available span), then the first downward crossing is
    located by linear interpolation.

    Raises:
        ValueError: if the curve never reaches the level.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    kernel = np.ones(min(window, len(errors)))
    smooth = np.convolve(errors, kernel, mode="same") / np.convolve(
        np.ones_like(errors), kernel, mode="same"
    )
    below = np.nonzero(smooth <= level)[0]
    if len(below) == 0:
        raise ValueError(
            f"error curve never reaches {level} (minimum {smooth.min():.3e})"
        )
    k = int(below[0])
    if k == 0:
        return float(times[0])
    t0, t1 = times[k - 1], times[k]
    e0, e1 = smooth[k - 1], smooth[k]
    if e0 == e1:
        return float(t1)
    frac = (e0 - level) / (e0 - e1)
    return float(t0 + frac * (t1 - t0))


def bayes_speedup(stats: EnsembleStats, level: float = 1e-2, window: int = 15) -> dict:
    """Crossing times of both error curves and the Bayesian time saving.

    Returns a dict with ``t_threshold``, ``t_bayes`` (s) and ``saving``,
    the fractional reduction 1 - t_bayes/t_threshold.
    """
    t_thr = error_crossing_time(stats.times, stats.error_threshold, level, window)
    t_bay = error_crossing_time(stats.times, stats.error_bayes, level, window)
    return {
        "level": level,
        "t_threshold": t_thr,
        "t_bayes": t_bay,
        "saving": 1.0 - t_bay / t_thr,
    }
