"""Time delay, feedback coefficient, and the interpolable velocity history.

The delayed term k(t) * chi_delay * u_t(t - tau(t)) needs the masked
velocity at past times.  A :class:`HistoryBuffer` keeps a rolling record
of grid samples pushed by the integrator; queries at s <= 0 are answered
by the initial datum g, queries inside the current (not yet completed)
step fall back on the newest completed sample (explicit lag), everything
else is linear interpolation.
"""

from __future__ import annotations

import bisect
import math

import numpy as np
from scipy import integrate


class ConfigurationError(ValueError):
    """A delay/coefficient table violates its declared bounds."""


class HistoryError(RuntimeError):
    """A history query fell outside the answerable range."""


class DelayFunction:
    """Time delay tau(t), continuous with 0 <= tau(t) <= bound.

    Kinds: "constant", "table" (piecewise-linear), "sinusoidal"
    tau(t) = bound*(1+sin(freq*t+phase))/2, "vanishing"
    tau(t) = bound*exp(-rate*t).
    """

    def __init__(self, kind, bound, value=None, times=None, values=None,
                 frequency=None, phase=0.0, rate=None):
        if bound < 0:
            raise ConfigurationError("delay bound must be nonnegative")
        self.kind = kind
        self.bound = float(bound)
        if kind == "constant":
            self.value = self.bound if value is None else float(value)
            if not (0.0 <= self.value <= self.bound):
                raise ConfigurationError("constant delay exceeds declared bound")
        elif kind == "table":
            self.times = np.asarray(times, dtype=float)
            self.values = np.asarray(values, dtype=float)
            if self.times.ndim != 1 or self.times.shape != self.values.shape:
                raise ConfigurationError("delay table needs matching 1-d times/values")
            if np.any(np.diff(self.times) <= 0):
                raise ConfigurationError("delay table times must increase")
            if np.any(self.values < 0) or np.any(self.values > self.bound + 1e-12):
                raise ConfigurationError("delay table value outside [0, bound]")
        elif kind == "sinusoidal":
            self.frequency = float(frequency)
            self.phase = float(phase)
        elif kind == "vanishing":
            self.rate = float(rate)
            if self.rate < 0:
                raise ConfigurationError("vanishing delay rate must be nonnegative")
        else:
            raise ConfigurationError(f"unknown delay kind {kind!r}")

    def __call__(self, t):
        if self.kind == "constant":
            return self.value
        if self.kind == "table":
            v = float(np.interp(t, self.times, self.values))
        elif self.kind == "sinusoidal":
            v = self.bound * (1.0 + math.sin(self.frequency * t + self.phase)) / 2.0
        else:  # vanishing
            v = self.bound * math.exp(-self.rate * t)
        if v < -1e-12 or v > self.bound + 1e-9:
            raise ConfigurationError(
                f"delay value {v} at t={t} violates declared bound {self.bound}"
            )
        return min(max(v, 0.0), self.bound)


class ShiftedDelay:
    """tau(t) + eps, used by the vanishing-delay approximation study."""

    def __init__(self, base, eps):
        if eps < 0:
            raise ConfigurationError("delay shift must be nonnegative")
        self.base = base
        self.eps = float(eps)
        self.bound = base.bound + self.eps
        self.kind = f"shifted-{base.kind}"

    def __call__(self, t):
        return self.base(t) + self.eps


class CoefficientFunction:
    """Delay feedback coefficient k(t), defined on [-tau_bar, +infinity).

    Kinds: "constant", "table" (piecewise-linear), "exp"
    k(t) = amplitude*exp(-rate*t).
    """

    def __init__(self, kind, value=None, times=None, values=None,
                 amplitude=None, rate=None):
        self.kind = kind
        if kind == "constant":
            self.value = float(value)
        elif kind == "table":
            self.times = np.asarray(times, dtype=float)
            self.values = np.asarray(values, dtype=float)
            if self.times.ndim != 1 or self.times.shape != self.values.shape:
                raise ConfigurationError("coefficient table needs matching times/values")
            if np.any(np.diff(self.times) <= 0):
                raise ConfigurationError("coefficient table times must increase")
        elif kind == "exp":
            self.amplitude = float(amplitude)
            self.rate = float(rate)
            if self.rate <= 0:
                raise ConfigurationError("exp coefficient needs rate > 0")
        else:
            raise ConfigurationError(f"unknown coefficient kind {kind!r}")

    def __call__(self, t):
        if self.kind == "constant":
            return self.value
        if self.kind == "table":
            return float(np.interp(t, self.times, self.values))
        return self.amplitude * math.exp(-self.rate * t)

    def abs_integral(self, t0, t1):
        """Integral of |k| over [t0, t1], closed-form where available."""
        if t1 <= t0:
            return 0.0
        if self.kind == "constant":
            return abs(self.value) * (t1 - t0)
        if self.kind == "exp":
            a, s = abs(self.amplitude), self.rate
            return a * (math.exp(-s * t0) - math.exp(-s * t1)) / s
        val, _ = integrate.quad(lambda s: abs(self(s)), t0, t1,
                                epsabs=1e-10, limit=200)
        return val

    def window_integral(self, t, tau_bar):
        """Integral of |k| over [t - tau_bar, t]."""
        return self.abs_integral(t - tau_bar, t)

    def cumulative_integral(self, t):
        """Integral of |k| over [0, t]."""
        return self.abs_integral(0.0, t)

    def l1_norm(self):
        """||k||_{L^1([0, inf))}; inf when the coefficient is not integrable."""
        if self.kind == "exp":
            return abs(self.amplitude) / self.rate
        if self.kind == "constant":
            return 0.0 if self.value == 0.0 else math.inf
        # table: constant extrapolation beyond the last node
        if abs(self.values[-1]) > 0:
            return math.inf
        return self.abs_integral(0.0, float(self.times[-1]))

    def is_zero(self):
        if self.kind == "constant":
            return self.value == 0.0
        if self.kind == "table":
            return bool(np.all(self.values == 0.0))
        return self.amplitude == 0.0


def tau_eval(df, t):
    """Evaluate the delay function; value guaranteed inside [0, bound]."""
    return df(t)


def k_window_integral(cf, t, tau_bar):
    return cf.window_integral(t, tau_bar)


def k_cumulative_integral(cf, t):
    return cf.cumulative_integral(t)


class VelocityHistorySeed:
    """Initial datum g(s), s in [-tau_bar, 0], as a masked grid field.

    The spatial profile is the delay-region indicator scaled by a time
    profile c(s) which is either constant or a piecewise-linear table.
    """

    def __init__(self, model, kind="constant", value=0.0, times=None, values=None):
        self.model = model
        self.kind = kind
        self._mask = model.delay_mask
        self._mask_norm = math.sqrt(model.grid_norm_sq(self._mask))
        if kind == "constant":
            self.value = float(value)
        elif kind == "table":
            self.times = np.asarray(times, dtype=float)
            self.values = np.asarray(values, dtype=float)
            if self.times.ndim != 1 or self.times.shape != self.values.shape:
                raise ConfigurationError("g table needs matching times/values")
            if np.any(np.diff(self.times) <= 0):
                raise ConfigurationError("g table times must increase")
        else:
            raise ConfigurationError(f"unknown g kind {kind!r}")

    def amplitude(self, s):
        if self.kind == "constant":
            return self.value
        # clamp: constant extrapolation keeps g continuous at the edges
        return float(np.interp(s, self.times, self.values))

    def grid_values(self, s):
        return self.amplitude(s) * self._mask

    def w2_norm(self, s):
        return abs(self.amplitude(s)) * self._mask_norm

    def w2_norm_sq(self, s):
        return self.w2_norm(s) ** 2

    def max_w2_norm(self, tau_bar, samples=512):
        if tau_bar == 0.0:
            return self.w2_norm(0.0)
        ss = np.linspace(-tau_bar, 0.0, samples)
        return max(self.w2_norm(s) for s in ss)

    def is_zero(self):
        if self.kind == "constant":
            return self.value == 0.0
        return bool(np.all(self.values == 0.0))


class HistoryBuffer:
    """Time-stamped record of the masked velocity chi_delay * u_t.

    Owned by exactly one running simulation.  ``dt`` bounds how far past
    the newest completed sample a query may reach (the explicit-lag rule
    for degenerate delay).
    """

    def __init__(self, seed, tau_bar, dt):
        self.seed = seed
        self.tau_bar = float(tau_bar)
        self.dt = float(dt)
        self._times = []
        self._values = []
        self._oldest_retained = -self.tau_bar

    def push(self, t, values):
        if self._times and t <= self._times[-1]:
            raise ValueError("history timestamps must strictly increase")
        self._times.append(float(t))
        self._values.append(values)
        # prune to the retention horizon, in blocks to keep push O(1) amortized
        if len(self._times) > 4096:
            cutoff = self._times[-1] - self.tau_bar - 2 * self.dt
            i = bisect.bisect_left(self._times, cutoff)
            if i > 64:
                self._oldest_retained = self._times[i]
                del self._times[:i]
                del self._values[:i]

    def newest_time(self):
        return self._times[-1] if self._times else 0.0

    def eval(self, s):
        """Masked velocity grid values at time s."""
        if s <= 0.0:
            if s < -self.tau_bar - 1e-9:
                raise HistoryError(f"query s={s} precedes the initial segment")
            return self.seed.grid_values(max(s, -self.tau_bar))
        newest = self.newest_time()
        if s > newest + self.dt * (1.0 + 1e-9):
            raise HistoryError(
                f"query s={s} is more than one step past the newest sample {newest}"
            )
        if s >= newest:
            # inside the current step: explicit lag
            if self._times:
                return self._values[-1]
            return self.seed.grid_values(0.0)
        if s < self._oldest_retained - 1e-12:
            raise HistoryError(f"query s={s} older than the retention horizon")
        i = bisect.bisect_right(self._times, s)
        if i == 0:
            # between t=0 (seed) and the first stored sample
            t1, w1 = self._times[0], self._values[0]
            t0, w0 = 0.0, self.seed.grid_values(0.0)
        else:
            t0, w0 = self._times[i - 1], self._values[i - 1]
            t1, w1 = self._times[i], self._values[i]
        theta = (s - t0) / (t1 - t0)
        return (1.0 - theta) * w0 + theta * w1


def history_eval(hb, s):
    """Functional form of :meth:`HistoryBuffer.eval`."""
    return hb.eval(s)
