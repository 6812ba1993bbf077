"""Time integration of the semidiscrete delayed wave system.

Modal equations:  u_k'' + lambda_k u_k = <RHS, e_k>  with
RHS = -a chi_damp u_t - k(t) chi_delay u_t(t - tau(t)) + u|u|^beta.

The default scheme integrates the whole linear part exactly -- modal
rotation together with the frictional damping, via a precomputed matrix
exponential -- and applies the delay term and the nonlinearity as
half-step kicks frozen at the step endpoints (velocity-Verlet layout,
second order; exact in the conservative limit).  Folding the damping
into the exact flow instead of the kicks is what keeps the scheme
second order: an Euler half-kick of the velocity-proportional damping
is only first-order accurate.  A plain leapfrog on the full
acceleration is kept as a cross-check scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .delays import HistoryBuffer, HistoryError

DIVERGENCE_NORM = 1e8


@dataclass
class State:
    t: float
    u: np.ndarray
    v: np.ndarray


@dataclass
class StepperConfig:
    dt: float
    t_end: float
    stride: int = 10
    scheme: str = "strang-kick"

    def validate(self, model):
        if self.dt <= 0 or self.t_end <= 0 or self.stride < 1:
            raise ValueError("stepper needs dt > 0, t_end > 0, stride >= 1")
        if self.scheme not in ("strang-kick", "leapfrog"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        guard = 0.5 / math.sqrt(model.eigenvalues[-1])
        if self.dt > guard:
            raise ValueError(
                f"dt={self.dt} exceeds the stability guard 0.5/sqrt(lambda_N)={guard:.3g}"
            )


def default_dt(model):
    return min(1e-3, 0.1 / math.sqrt(model.eigenvalues[-1]))


@dataclass
class TrajectoryRecord:
    """Sampled states plus the per-step scalar record the diagnostics need."""

    times: np.ndarray
    u: np.ndarray            # (n_samples, N)
    v: np.ndarray            # (n_samples, N)
    delayed_norm: np.ndarray  # ||k(t) chi_delay u_t(t - tau(t))||_H at samples
    status: str
    diverged_at: float | None
    hist_times: np.ndarray    # step grid from -tau_bar to the last completed step
    hist_norm_sq: np.ndarray  # ||B* u_t||^2_{W2} on that grid
    dt: float
    stride: int

    def state_norms(self, model):
        return np.sqrt(self.u ** 2 @ model.eigenvalues + (self.v ** 2).sum(axis=1))


class Stepper:
    """One-step advancement; owns no mutable state besides scratch arrays."""

    def __init__(self, model, cf, df, beta=None, scheme="strang-kick"):
        self.model = model
        self.cf = cf
        self.df = df
        self.beta = beta
        self.scheme = scheme
        lam = model.sqrt_eigenvalues
        self._lam = lam
        self._eigs = model.eigenvalues
        a = model.damping_coefficient
        if a > 0.0 and model.damping_region:
            # modal damping operator a P, P = project(chi_O * lift(.))
            self._damp = a * (model.proj * model.damping_mask) @ model.basis
        else:
            self._damp = None
        self._propagators = {}

    def _propagator(self, dt):
        """Exact flow of z' = [[0, I], [-Lambda, -aP]] z over one step."""
        S = self._propagators.get(dt)
        if S is None:
            n = self.model.n_modes
            lin = np.zeros((2 * n, 2 * n))
            lin[:n, n:] = np.eye(n)
            lin[n:, :n] = -np.diag(self._eigs)
            lin[n:, n:] = -self._damp
            S = expm(dt * lin)
            self._propagators[dt] = S
        return S

    def _rhs(self, t, u, v, source):
        """Modal projection of the kick terms (delay feedback and
        nonlinearity); also returns the delayed contribution's H norm
        (a diagnostic)."""
        model = self.model
        acc = np.zeros(model.n_quad)
        k_t = self.cf(t)
        delayed_norm = 0.0
        if k_t != 0.0:
            delayed = source(t - self.df(t))
            term = k_t * delayed
            delayed_norm = model.grid_norm(term)
            acc -= term
        if self.beta is not None:
            ug = model.basis @ u
            acc += ug * np.abs(ug) ** self.beta
        return model.proj @ acc, delayed_norm

    def _linear_flow(self, u, v, dt):
        """Exact propagation of the linear damped part over dt."""
        if self._damp is None:
            # undamped: pure modal rotation, exact and norm-preserving
            lam = self._lam
            th = lam * dt
            c, s = np.cos(th), np.sin(th)
            return u * c + v * (s / lam), -u * (lam * s) + v * c
        n = self.model.n_modes
        z = self._propagator(dt) @ np.concatenate([u, v])
        return z[:n], z[n:]

    def _damping_acc(self, v):
        return 0.0 if self._damp is None else -(self._damp @ v)

    def step(self, state, source, dt):
        """Advance one step; returns (new_state, delayed_norm_at_step_start)."""
        t, u, v = state.t, state.u, state.v
        if self.scheme == "strang-kick":
            r0, dn = self._rhs(t, u, v, source)
            v = v + 0.5 * dt * r0
            u, v = self._linear_flow(u, v, dt)
            r1, _ = self._rhs(t + dt, u, v, source)
            v = v + 0.5 * dt * r1
        else:  # leapfrog
            r0, dn = self._rhs(t, u, v, source)
            a0 = -self._eigs * u + self._damping_acc(v) + r0
            v = v + 0.5 * dt * a0
            u = u + dt * v
            r1, _ = self._rhs(t + dt, u, v, source)
            a1 = -self._eigs * u + self._damping_acc(v) + r1
            v = v + 0.5 * dt * a1
        return State(t + dt, u, v), dn


def step(model, state, history, cf, df, beta, dt, scheme="strang-kick"):
    """Single-step contract: advances the state and pushes B* u_t into history."""
    stepper = Stepper(model, cf, df, beta, scheme)
    new_state, _ = stepper.step(state, history.eval, dt)
    w = model.delay_mask * (model.basis @ new_state.v)
    history.push(new_state.t, w)
    return new_state


class Forcing:
    """Known delayed-term source for the method-of-steps oracle."""

    def __init__(self, func, t_min, t_max):
        self.func = func
        self.t_min = float(t_min)
        self.t_max = float(t_max)

    def __call__(self, s):
        if s < self.t_min - 1e-9 or s > self.t_max + 1e-9:
            raise HistoryError(f"forcing queried at s={s} outside "
                               f"[{self.t_min}, {self.t_max}]")
        return self.func(s)

    @classmethod
    def from_seed(cls, seed, tau_bar):
        return cls(lambda s: seed.grid_values(min(max(s, -tau_bar), 0.0)),
                   -tau_bar, 0.0)


def _seed_segment(seed, tau_bar, dt):
    """Uniform grid of g's W2 norm^2 on [-tau_bar, 0)."""
    if tau_bar <= 0.0:
        return [], []
    n_left = int(math.ceil(tau_bar / dt - 1e-12))
    ts = [-j * dt for j in range(n_left, 0, -1)]
    ts[0] = max(ts[0], -tau_bar)
    if ts[0] > -tau_bar + 1e-12:
        ts.insert(0, -tau_bar)
    return ts, [seed.w2_norm_sq(s) for s in ts]


def _run_loop(model, u0, v0, stepper, source, config, tau_bar, seed,
              history=None):
    dt, stride = config.dt, config.stride
    n_steps = int(round(config.t_end / dt))
    u = np.array(u0, dtype=float)
    v = np.array(v0, dtype=float)

    hist_t, hist_nsq = _seed_segment(seed, tau_bar, dt)
    w = model.delay_mask * (model.basis @ v)
    hist_t.append(0.0)
    hist_nsq.append(model.grid_norm_sq(w))
    if history is not None:
        history.push(0.0, w)

    times, us, vs, dnorms = [], [], [], []
    status, diverged_at = "completed", None
    state = State(0.0, u, v)
    for i in range(n_steps):
        state.t = i * dt  # keep the time grid exact
        new_state, dn = stepper.step(state, source, dt)
        if i % stride == 0:
            times.append(state.t)
            us.append(state.u)
            vs.append(state.v)
            dnorms.append(dn)
        norm2 = float(np.dot(model.eigenvalues, new_state.u ** 2)
                      + np.dot(new_state.v, new_state.v))
        if not math.isfinite(norm2) or norm2 > DIVERGENCE_NORM ** 2:
            status, diverged_at = "diverged", new_state.t
            break
        w = model.delay_mask * (model.basis @ new_state.v)
        hist_t.append(new_state.t)
        hist_nsq.append(model.grid_norm_sq(w))
        if history is not None:
            history.push(new_state.t, w)
        state = new_state
    else:
        if n_steps % stride == 0:
            dn = 0.0
            k_t = stepper.cf(state.t)
            if k_t != 0.0:
                try:
                    delayed = source(state.t - stepper.df(state.t))
                    dn = model.grid_norm(k_t * delayed)
                except HistoryError:
                    dn = 0.0
            times.append(state.t)
            us.append(state.u)
            vs.append(state.v)
            dnorms.append(dn)

    return TrajectoryRecord(
        times=np.asarray(times),
        u=np.asarray(us),
        v=np.asarray(vs),
        delayed_norm=np.asarray(dnorms),
        status=status,
        diverged_at=diverged_at,
        hist_times=np.asarray(hist_t),
        hist_norm_sq=np.asarray(hist_nsq),
        dt=dt,
        stride=stride,
    )


def run(model, cf, df, seed, u0, v0, config, beta=None):
    """Full trajectory with the history buffer seeded from g."""
    config.validate(model)
    history = HistoryBuffer(seed, df.bound, config.dt)
    stepper = Stepper(model, cf, df, beta, config.scheme)
    return _run_loop(model, u0, v0, stepper, history.eval, config,
                     df.bound, seed, history=history)


def run_forced(model, cf, df, seed, u0, v0, config, forcing, beta=None):
    """Trajectory with the delayed term read from a known forcing function.

    Requires tau(t) >= tau_0 > 0 on the run interval (method of steps).
    """
    config.validate(model)
    taus = [df(t) for t in np.linspace(0.0, config.t_end, 512)]
    if min(taus) <= 0.0:
        raise ValueError("run_forced requires tau(t) bounded away from zero")
    stepper = Stepper(model, cf, df, beta, config.scheme)
    return _run_loop(model, u0, v0, stepper, forcing, config,
                     df.bound, seed, history=None)
