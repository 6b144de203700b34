"""Count-process simulators.

Covers the latent integer-valued autoregressions (first order, finite order
p, and the geometric-lag infinite-order process), the thinning-based
reporting mechanisms that turn a latent series into an observed one, and an
individual-level birth/survival/observation simulator whose aggregates
reproduce the same laws.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, UnsupportedMechanismError
from .sampling import (
    RngStream,
    binomial_thin,
    geometric_draws,
    multinomial_allocate,
    poisson_draw,
)


@dataclass(frozen=True)
class Inar1Spec:
    """First-order process: X_t = alpha ∘ X_{t-1} + Poisson(lambda) immigration."""

    lambda_: float
    alpha: float

    def __post_init__(self):
        if not self.lambda_ > 0:
            raise ParameterError(f"immigration rate must be positive, got {self.lambda_}")
        if not 0.0 <= self.alpha < 1.0:
            raise ParameterError(f"survival probability must lie in [0, 1), got {self.alpha}")

    @property
    def stationary_mean(self) -> float:
        return self.lambda_ / (1.0 - self.alpha)


@dataclass(frozen=True)
class InarPSpec:
    """Order-p process with one thinning weight per lag; weights must sum below 1."""

    lambda_: float
    alphas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not self.lambda_ > 0:
            raise ParameterError(f"immigration rate must be positive, got {self.lambda_}")
        if any(a < 0 for a in self.alphas):
            raise ParameterError("lag weights must be nonnegative")
        if math.fsum(self.alphas) >= 1.0:
            raise ParameterError(
                f"lag weights must sum below 1, got {math.fsum(self.alphas)}"
            )

    @property
    def total_weight(self) -> float:
        return math.fsum(self.alphas)

    @property
    def stationary_mean(self) -> float:
        return self.lambda_ / (1.0 - self.total_weight)


@dataclass(frozen=True)
class GeomInarSpec:
    """Infinite-order process with geometrically decaying lag weights.

    Lag i carries weight beta * gamma**(i-1). Requires 0 <= beta < 1 - gamma
    and gamma >= 0; beta = 0 or gamma = 0 are admitted boundary cases (i.i.d.
    Poisson and first-order degenerations).
    """

    lambda_: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not self.lambda_ > 0:
            raise ParameterError(f"immigration rate must be positive, got {self.lambda_}")
        if self.gamma < 0:
            raise ParameterError(f"decay factor must be nonnegative, got {self.gamma}")
        if not 0.0 <= self.beta < 1.0 - self.gamma:
            raise ParameterError(
                f"lag-1 weight must satisfy 0 <= beta < 1 - gamma, got "
                f"beta={self.beta}, gamma={self.gamma}"
            )

    @property
    def total_weight(self) -> float:
        """Sum of all lag weights, beta / (1 - gamma) in closed form."""
        return self.beta / (1.0 - self.gamma)

    @property
    def stationary_mean(self) -> float:
        return self.lambda_ * (1.0 - self.gamma) / (1.0 - self.beta - self.gamma)


@dataclass(frozen=True)
class ReportingSpec:
    """Observation mechanism: with probability omega the count is thinned by q,
    otherwise it is reported completely."""

    q: float
    omega: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ParameterError(f"reporting probability must lie in (0, 1], got {self.q}")
        if not 0.0 <= self.omega <= 1.0:
            raise ParameterError(
                f"underreported-state probability must lie in [0, 1], got {self.omega}"
            )


@dataclass(frozen=True)
class CountSeries:
    """Immutable simulated (or observed) count series with its provenance."""

    values: np.ndarray
    seed: tuple[int, int]
    burn_in: int
    model_tag: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.ndim != 1 or v.size == 0:
            raise ParameterError("a count series must be a nonempty 1-d array")
        if (v < 0).any():
            raise ParameterError("counts must be nonnegative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.size)

    def to_csv(self) -> str:
        lines = ["t,count"]
        lines.extend(f"{t},{c}" for t, c in enumerate(self.values))
        return "\n".join(lines) + "\n"


def write_series_csv(series: CountSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(series.to_csv())


def _default_burn_in(total_weight: float) -> int:
    # Scales with the mean-recursion mixing time; floor of 500 steps.
    return max(500, math.ceil(50.0 / (1.0 - total_weight)))


def simulate_inar1(
    spec: Inar1Spec, t_len: int, rng: RngStream, burn_in: int = 0
) -> CountSeries:
    """Simulate the first-order process.

    The initial state is drawn from the stationary Poisson(lambda/(1-alpha))
    marginal, so no burn-in is needed; ``burn_in`` extra steps are still
    simulated and discarded if requested.

    Args:
        spec: process parameters.
        t_len: number of retained steps, at least 1.
        rng: stream consumed by the simulation.
        burn_in: steps discarded before the retained window.

    Returns:
        CountSeries of length ``t_len``.
    """
    if t_len < 1:
        raise ParameterError(f"series length must be at least 1, got {t_len}")
    if burn_in < 0:
        raise ParameterError(f"burn-in must be nonnegative, got {burn_in}")
    steps = burn_in + t_len
    out = np.empty(steps, dtype=np.int64)
    x = poisson_draw(spec.stationary_mean, rng)
    for t in range(steps):
        x = binomial_thin(x, spec.alpha, rng) + poisson_draw(spec.lambda_, rng)
        out[t] = x
    return CountSeries(
        values=out[burn_in:],
        seed=rng.identity,
        burn_in=burn_in,
        model_tag=f"inar1(lambda={spec.lambda_},alpha={spec.alpha})",
    )


def simulate_inar_p(
    spec: InarPSpec, t_len: int, rng: RngStream, burn_in: int | None = None
) -> CountSeries:
    """Simulate the order-p process via the joint renewal-allocation scheme.

    Each step allocates the current count once: the number to be renewed is
    Binomial(X_t, sum of weights), and their waiting times follow the
    normalized weight distribution over lags 1..p, so the lag-i contribution
    is marginally Binomial(X_t, alpha_i) and the contributions never exceed
    X_t in total. History before the start is empty; ``burn_in`` steps
    (default scales with mixing time) are discarded.
    """
    if t_len < 1:
        raise ParameterError(f"series length must be at least 1, got {t_len}")
    if burn_in is None:
        burn_in = _default_burn_in(spec.total_weight)
    if burn_in < 0:
        raise ParameterError(f"burn-in must be nonnegative, got {burn_in}")
    p = len(spec.alphas)
    total = spec.total_weight
    lag_probs = [a / total for a in spec.alphas] if total > 0 else []
    steps = burn_in + t_len
    pending = np.zeros(steps + p + 1, dtype=np.int64)
    out = np.empty(steps, dtype=np.int64)
    for t in range(steps):
        x = int(pending[t]) + poisson_draw(spec.lambda_, rng)
        out[t] = x
        if total > 0 and x > 0:
            renewals = binomial_thin(x, total, rng)
            if renewals > 0:
                counts = multinomial_allocate(renewals, lag_probs, rng)
                for lag, c in enumerate(counts, start=1):
                    pending[t + lag] += c
    return CountSeries(
        values=out[burn_in:],
        seed=rng.identity,
        burn_in=burn_in,
        model_tag=f"inar_p(lambda={spec.lambda_},alphas={list(spec.alphas)})",
    )


def _run_geom_inar(
    spec: GeomInarSpec, steps: int, rng: RngStream
) -> tuple[np.ndarray, dict[str, int]]:
    """Core event-scheduled loop; returns the path and renewal-queue accounting."""
    total = spec.total_weight
    renew_prob = 1.0 - spec.gamma
    due: dict[int, int] = defaultdict(int)
    out = np.empty(steps, dtype=np.int64)
    scheduled = 0
    fired = 0
    for t in range(steps):
        arrivals = due.pop(t, 0)
        fired += arrivals
        x = arrivals + poisson_draw(spec.lambda_, rng)
        out[t] = x
        if total > 0 and x > 0:
            renewals = binomial_thin(x, total, rng)
            if renewals > 0:
                scheduled += renewals
                waits = geometric_draws(renew_prob, renewals, rng)
                for w in waits:
                    due[t + int(w)] += 1
    stats = {
        "scheduled": scheduled,
        "fired": fired,
        "pending_end": int(sum(due.values())),
    }
    return out, stats


def simulate_inar_inf(
    spec: GeomInarSpec, t_len: int, rng: RngStream, burn_in: int | None = None
) -> CountSeries:
    """Simulate the geometric-lag infinite-order process.

    Event-scheduled: each step draws the number of individuals to be renewed,
    Binomial(X_t, beta/(1-gamma)), draws one geometric waiting time per
    renewal (support {1, 2, ...}, success probability 1-gamma) and enqueues
    it; the count at a step is the renewals due plus fresh Poisson
    immigration. Waiting times are never truncated. History before the start
    is empty; ``burn_in`` steps (default max(500, ceil(50/(1-beta-gamma))))
    are discarded.
    """
    if t_len < 1:
        raise ParameterError(f"series length must be at least 1, got {t_len}")
    if burn_in is None:
        burn_in = _default_burn_in(spec.beta + spec.gamma)
    if burn_in < 0:
        raise ParameterError(f"burn-in must be nonnegative, got {burn_in}")
    out, _ = _run_geom_inar(spec, burn_in + t_len, rng)
    return CountSeries(
        values=out[burn_in:],
        seed=rng.identity,
        burn_in=burn_in,
        model_tag=(
            f"geom_inf(lambda={spec.lambda_},beta={spec.beta},gamma={spec.gamma})"
        ),
    )


def apply_reporting(
    series: CountSeries, rep: ReportingSpec, rng: RngStream
) -> CountSeries:
    """Thin a series through the reporting mechanism.

    Independently at each step, with probability ``omega`` the reported count
    is a Binomial(X_t, q) thinning of the true one, otherwise the true count
    is reported. ``omega = 1`` is always-thinned reporting; ``omega = 0`` or
    ``q = 1`` reproduce the input values.
    """
    values = series.values
    g = rng.generator
    if rep.omega == 0.0:
        reported = values.copy()
    elif rep.omega == 1.0:
        reported = g.binomial(values, rep.q)
    else:
        underreported = g.random(values.size) < rep.omega
        thinned = g.binomial(values, rep.q)
        reported = np.where(underreported, thinned, values)
    return CountSeries(
        values=reported.astype(np.int64),
        seed=rng.identity,
        burn_in=series.burn_in,
        model_tag=f"{series.model_tag}|reported(q={rep.q},omega={rep.omega})",
    )


@dataclass(frozen=True)
class PopulationTrace:
    """Aggregated individual-level history of births, survival and observation.

    Per-step arrays (all of equal length):
      x        alive individuals,
      x_tilde  observed individuals,
      u_total  observed for the first time,
      v_total  observed before and observed again now,
      b_tilde  observed now and observed again at some later step.

    Sparse decompositions:
      u_counts maps (t, i) to the number first observed at t and born at t-i;
      v_counts maps (t, i) to the number observed at t whose previous
      observation was at t-i; gaps aggregates those re-observation gaps i.

    ``individuals`` holds one (birth, death, observation times) record per
    individual, with death None for those still alive at the end; every
    observation time lies in [birth, death).
    """

    x: np.ndarray
    x_tilde: np.ndarray
    u_total: np.ndarray
    v_total: np.ndarray
    b_tilde: np.ndarray
    u_counts: dict[tuple[int, int], int] = field(repr=False)
    v_counts: dict[tuple[int, int], int] = field(repr=False)
    gaps: dict[int, int] = field(repr=False)
    individuals: tuple = field(repr=False)
    params: tuple[float, float, float]  # (lambda, alpha, q) that generated it
    seed: tuple[int, int]

    def __post_init__(self):
        for name in ("x", "x_tilde", "u_total", "v_total", "b_tilde"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.x_tilde == self.u_total + self.v_total).all():
            raise ParameterError(
                "observed counts must split exactly into first and repeat observations"
            )
        for birth, death, obs in self.individuals:
            end = death if death is not None else math.inf
            if any(not birth <= o < end for o in obs):
                raise ParameterError(
                    "observation times must lie within the individual's lifetime"
                )

    def __len__(self) -> int:
        return int(self.x.size)

    def to_csv(self) -> str:
        lines = ["t,x,x_tilde,u_total,v_total"]
        lines.extend(
            f"{t},{self.x[t]},{self.x_tilde[t]},{self.u_total[t]},{self.v_total[t]}"
            for t in range(len(self))
        )
        return "\n".join(lines) + "\n"

    def to_long_csv(self) -> str:
        rows = [(t, i, "u", c) for (t, i), c in self.u_counts.items()]
        rows.extend((t, i, "v", c) for (t, i), c in self.v_counts.items())
        rows.sort()
        lines = ["t,i,kind,count"]
        lines.extend(f"{t},{i},{kind},{c}" for t, i, kind, c in rows)
        return "\n".join(lines) + "\n"


def write_trace_csv(trace: PopulationTrace, path, long_path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trace.to_csv())
    with open(long_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trace.to_long_csv())


def simulate_individual_level(
    spec: Inar1Spec, rep: ReportingSpec, t_len: int, rng: RngStream
) -> PopulationTrace:
    """Simulate the population individual by individual and aggregate it.

    Each step, Poisson(lambda) individuals are born; every individual present
    survives to the next step with probability alpha and, while alive, is
    observed with probability q at each step, all independently. The alive
    count then follows the first-order autoregression and the observed count
    its thinned version, which is what makes the aggregated trace a useful
    cross-check for the process-level simulators.

    Only time-homogeneous reporting is supported (``omega`` must be 1).
    Dead individuals are retired from the working set immediately, so memory
    tracks the alive population, not the elapsed time.
    """
    if rep.omega != 1.0:
        raise UnsupportedMechanismError(
            "individual-level simulation requires always-thinned reporting (omega = 1)"
        )
    if t_len < 1:
        raise ParameterError(f"series length must be at least 1, got {t_len}")
    g = rng.generator
    q = rep.q
    alpha = spec.alpha

    births: list[int] = []
    last_obs: list[int] = []  # -1 while never observed
    obs_times: list[list[int]] = []

    x = np.zeros(t_len, dtype=np.int64)
    x_tilde = np.zeros(t_len, dtype=np.int64)
    u_total = np.zeros(t_len, dtype=np.int64)
    v_total = np.zeros(t_len, dtype=np.int64)
    b_tilde = np.zeros(t_len, dtype=np.int64)
    u_counts: dict[tuple[int, int], int] = defaultdict(int)
    v_counts: dict[tuple[int, int], int] = defaultdict(int)
    gaps: dict[int, int] = defaultdict(int)
    records: list[tuple[int, int | None, tuple[int, ...]]] = []

    for t in range(t_len):
        for _ in range(poisson_draw(spec.lambda_, rng)):
            births.append(t)
            last_obs.append(-1)
            obs_times.append([])
        n = len(births)
        x[t] = n
        if n == 0:
            continue

        observed = g.random(n) < q
        x_tilde[t] = int(observed.sum())
        for j in np.nonzero(observed)[0]:
            prev = last_obs[j]
            if prev < 0:
                age = t - births[j]
                u_counts[(t, age)] += 1
                u_total[t] += 1
            else:
                gap = t - prev
                v_counts[(t, gap)] += 1
                v_total[t] += 1
                gaps[gap] += 1
                b_tilde[prev] += 1  # the previous observation now has a successor
            last_obs[j] = t
            obs_times[j].append(t)

        survives = g.random(n) < alpha
        keep = np.nonzero(survives)[0]
        for j in np.nonzero(~survives)[0]:
            records.append((births[j], t + 1, tuple(obs_times[j])))
        births = [births[j] for j in keep]
        last_obs = [last_obs[j] for j in keep]
        obs_times = [obs_times[j] for j in keep]

    records.extend(
        (births[j], None, tuple(obs_times[j])) for j in range(len(births))
    )

    return PopulationTrace(
        x=x,
        x_tilde=x_tilde,
        u_total=u_total,
        v_total=v_total,
        b_tilde=b_tilde,
        u_counts=dict(u_counts),
        v_counts=dict(v_counts),
        gaps=dict(gaps),
        individuals=tuple(records),
        params=(spec.lambda_, spec.alpha, q),
        seed=rng.identity,
    )
