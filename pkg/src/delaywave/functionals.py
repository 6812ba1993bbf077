"""Energy functionals, nonlinearity bounds, and inequality checks.

Everything here is a pure function of trajectory data.  The embedding
constants are the analytic 1-D ones (sup-norm C_s = sqrt(L/2), Poincare
C_p = L/pi), so the certified bounds are conservative at the continuum
level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid


@dataclass(frozen=True)
class NonlinearityParams:
    """Power nonlinearity u|u|^beta and its analytic growth constants."""

    beta: float
    length: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def c_sup(self):
        return math.sqrt(self.length / 2.0)

    @property
    def c_poincare(self):
        return self.length / math.pi

    @property
    def c_h(self):
        return self.c_sup ** self.beta * self.c_poincare

    @property
    def c_lip(self):
        return (self.beta + 1.0) * self.c_sup ** self.beta * self.c_poincare

    def h(self, r):
        if r < 0:
            raise ValueError("h takes nonnegative arguments")
        return self.c_h * r ** self.beta

    def h_inverse(self, y):
        if y < 0:
            raise ValueError("h_inverse takes nonnegative arguments")
        return (y / self.c_h) ** (1.0 / self.beta)

    def lipschitz(self, r):
        if r < 0:
            raise ValueError("lipschitz takes nonnegative arguments")
        return self.c_lip * r ** self.beta


def h_func(params, r):
    return params.h(r)


def h_inverse(params, y):
    return params.h_inverse(y)


def lipschitz_L(params, r):
    return params.lipschitz(r)


def psi_value(model, u, beta):
    """Potential (1/(beta+2)) integral |u|^(beta+2) by quadrature."""
    ug = model.basis @ u
    return float(np.dot(model.weights, np.abs(ug) ** (beta + 2.0))) / (beta + 2.0)


def grad_psi(model, u, beta):
    """Gradient u|u|^beta, pointwise on the grid, projected to N modes."""
    ug = model.basis @ u
    return model.proj @ (ug * np.abs(ug) ** beta)


def cbar(cf, b, t):
    """Gronwall envelope coefficient (1/b^2) exp(6 b^2 int_0^t |k|)."""
    if b == 0.0:
        raise ValueError("cbar undefined for b = 0 (degenerate feedback)")
    return math.exp(6.0 * b * b * cf.cumulative_integral(t)) / (b * b)


def fit_decay_rate(times, values, window):
    """Least-squares fit log y = log A - r t on the given time window.

    Returns (amplitude, rate, residual).  Requires >= 10 samples with
    positive values inside the window.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    ta, tb = window
    sel = (t >= ta) & (t <= tb)
    if sel.sum() < 10:
        raise ValueError("fit window contains fewer than 10 samples")
    t, y = t[sel], y[sel]
    if np.any(y <= 0.0):
        raise ValueError("fit window contains nonpositive values")
    logy = np.log(y)
    slope, intercept = np.polyfit(t, logy, 1)
    resid = float(np.sqrt(np.mean((logy - (slope * t + intercept)) ** 2)))
    return float(np.exp(intercept)), float(-slope), resid


@dataclass
class DiagnosticsTable:
    """Per-sample diagnostic series along one trajectory."""

    times: np.ndarray
    energy: np.ndarray          # E(t)
    script_e: np.ndarray        # running-max functional
    cbar_bound: np.ndarray      # Cbar(t) * scriptE(0)
    norm_u_state: np.ndarray    # ||U(t)||
    norm_ut: np.ndarray         # ||u_t||
    ahalf_u: np.ndarray         # ||A^1/2 u||
    psi: np.ndarray
    k_t: np.ndarray
    tau_t: np.ndarray
    delayed_term_norm: np.ndarray
    envelope_r2: np.ndarray
    window_integral: np.ndarray  # int_{t-taubar}^t |k| ||B* u_t||^2
    script_e0: float
    cbar_scale: float = 1.0


def _window_integrals(traj, cf, tau_bar, sample_times):
    """Trapezoid of |k(s)| ||B* u_t(s)||^2 over [t - tau_bar, t] per sample."""
    s = traj.hist_times
    f = np.array([abs(cf(si)) for si in s]) * traj.hist_norm_sq
    if len(s) < 2:
        return np.zeros(len(sample_times))
    q = np.concatenate([[0.0], cumulative_trapezoid(f, s)])
    qt = np.interp(sample_times, s, q)
    qlo = np.interp(np.maximum(sample_times - tau_bar, s[0]), s, q)
    return qt - qlo


def compute_diagnostics(model, traj, cf, df, seed, beta=None, certificate=None,
                        cbar_scale=1.0):
    """Fill every diagnostic series the CSV schema and the checks need.

    ``certificate`` (optional) supplies the r2 envelope; without it the
    envelope column is zero.  ``cbar_scale`` is a test hook scaling the
    Gronwall coefficient.
    """
    t = traj.times
    lam = model.eigenvalues
    norm_ut = np.sqrt((traj.v ** 2).sum(axis=1))
    ahalf_u = np.sqrt(traj.u ** 2 @ lam)
    norm_u_state = np.sqrt(norm_ut ** 2 + ahalf_u ** 2)
    if beta is not None:
        psi = np.array([psi_value(model, ui, beta) for ui in traj.u])
    else:
        psi = np.zeros(len(t))

    tau_bar = df.bound
    window = _window_integrals(traj, cf, tau_bar, t)
    energy = 0.5 * norm_ut ** 2 + 0.5 * ahalf_u ** 2 - psi + 0.5 * window

    b = model.norm_b()
    g_part = 0.25 * seed.max_w2_norm(tau_bar) ** 2
    running_max_e = np.maximum.accumulate(energy)
    script_e = np.maximum(g_part, b * b * running_max_e)
    script_e0 = max(g_part, b * b * energy[0]) if len(energy) else g_part

    if b > 0.0:
        cbar_t = np.array([cbar(cf, b, ti) for ti in t]) * cbar_scale
        cbar_bound = cbar_t * script_e0
    else:
        cbar_bound = np.full(len(t), np.nan)

    k_t = np.array([cf(ti) for ti in t])
    tau_t = np.array([df(ti) for ti in t])

    if certificate is not None:
        envelope = certificate.envelope(t, rate="r2")
    else:
        envelope = np.zeros(len(t))

    return DiagnosticsTable(
        times=t, energy=energy, script_e=script_e, cbar_bound=cbar_bound,
        norm_u_state=norm_u_state, norm_ut=norm_ut, ahalf_u=ahalf_u, psi=psi,
        k_t=k_t, tau_t=tau_t, delayed_term_norm=traj.delayed_norm,
        envelope_r2=envelope, window_integral=window,
        script_e0=script_e0, cbar_scale=cbar_scale,
    )


@dataclass
class BoundReport:
    name: str
    passed: bool
    first_violation_t: float | None = None
    detail: str = ""
    vacuous: bool = False


def check_prop_bound(diag, dt):
    """Gronwall bound E(t) <= Cbar(t) scriptE(0), where E >= ||u_t||^2/4 holds.

    Tolerance: 1e-6 relative plus a 10*dt^2 discretization slack.
    """
    tol_abs = 10.0 * dt * dt
    hyp_ok = diag.energy >= 0.25 * diag.norm_ut ** 2 - tol_abs
    hyp_holds_so_far = np.cumprod(hyp_ok).astype(bool)
    bound_ok = diag.energy <= diag.cbar_bound * (1.0 + 1e-6) + tol_abs
    violated = hyp_holds_so_far & ~bound_ok
    if violated.any():
        i = int(np.argmax(violated))
        return BoundReport("gronwall-upper", False, float(diag.times[i]),
                           f"E={diag.energy[i]:.6g} > bound={diag.cbar_bound[i]:.6g}")
    detail = "hypothesis E >= ||u_t||^2/4 held at all samples" \
        if hyp_holds_so_far[-1] else \
        f"hypothesis failed from t={diag.times[int(np.argmin(hyp_ok))]:.4g}"
    return BoundReport("gronwall-upper", True, detail=detail)


def check_lower_bound(diag, params, cbar_T, dt):
    """Lower energy bound E(t) > (||u_t||^2 + ||A^1/2 u||^2 + window)/4.

    Valid while the smallness hypotheses on h hold; reports their status.
    ``params`` may be None (linear case: the bound strengthens trivially).
    """
    tol_abs = 10.0 * dt * dt
    if np.all(diag.norm_u_state == 0.0):
        return BoundReport("energy-lower", True, vacuous=True,
                           detail="zero solution: lemma vacuous")
    if params is not None:
        hyp1 = params.h(float(diag.ahalf_u[0])) < 0.5
        hyp2 = params.h(2.0 * math.sqrt(max(cbar_T * diag.script_e0, 0.0))) < 0.5
        if not (hyp1 and hyp2):
            return BoundReport("energy-lower", True, vacuous=True,
                               detail=f"smallness hypotheses not met "
                                      f"(h(u0)<1/2: {hyp1}, h(2 sqrt(CbarT E0))<1/2: {hyp2})")
    quarter = 0.25 * (diag.norm_ut ** 2 + diag.ahalf_u ** 2 + diag.window_integral)
    ok = diag.energy > quarter - (1e-6 * np.abs(quarter) + tol_abs)
    if not ok.all():
        i = int(np.argmax(~ok))
        return BoundReport("energy-lower", False, float(diag.times[i]),
                           f"E={diag.energy[i]:.6g} <= quarter-form={quarter[i]:.6g}")
    return BoundReport("energy-lower", True)


def check_envelope(diag, dt):
    """||U(t)|| never exceeds the certified r2 envelope (plus slack)."""
    if not np.any(diag.envelope_r2 > 0.0):
        return BoundReport("decay-envelope", True, vacuous=True,
                           detail="no certificate envelope available")
    tol_abs = 10.0 * dt * dt
    ok = diag.norm_u_state <= diag.envelope_r2 * (1.0 + 1e-6) + tol_abs
    if not ok.all():
        i = int(np.argmax(~ok))
        return BoundReport("decay-envelope", False, float(diag.times[i]),
                           f"||U||={diag.norm_u_state[i]:.6g} > "
                           f"envelope={diag.envelope_r2[i]:.6g}")
    return BoundReport("decay-envelope", True)
