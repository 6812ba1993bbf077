"""Constants chain for the small-data exponential decay certificate.

Pipeline: estimate (or accept) the linear semigroup constants (M, omega),
find (gamma, omega') making the delay-coefficient hypothesis hold, solve
for the horizon T with contraction factor C_T <= 1, derive the smallness
radius rho, certify concrete initial data, and emit the predicted decay
envelope with both reported rates

    r1 = omega - omega' - M L(C_rho)        (general theorem)
    r2 = (omega - omega') / 2               (small-data proof)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import stepping
from .delays import CoefficientFunction, DelayFunction, VelocityHistorySeed
from .functionals import NonlinearityParams, fit_decay_rate


class CertificateError(RuntimeError):
    """The constants chain cannot produce a valid certificate."""


@dataclass
class SemigroupEstimate:
    M: float
    omega: float
    provenance: str = "user-supplied"
    ensemble_size: int | None = None
    max_residual: float | None = None

    def __post_init__(self):
        if self.M < 1.0:
            raise CertificateError("semigroup constant M must be >= 1")
        if self.omega <= 0.0:
            raise CertificateError("semigroup rate omega must be positive")


def estimate_semigroup(model, n_ensemble=6, horizon=30.0, dt=5e-3, seed=0):
    """Fit (M, omega) from an ensemble of linear damped runs.

    omega is the slowest fitted decay rate times a 0.95 safety factor;
    M is the largest observed ||U(t)|| e^{omega t} times 1.05 (and >= 1).
    """
    if model.damping_coefficient <= 0.0 or not model.damping_region:
        raise CertificateError("semigroup estimation needs active damping")
    rng = np.random.default_rng(seed)
    zero_cf = CoefficientFunction("constant", value=0.0)
    zero_df = DelayFunction("constant", bound=0.0)
    g0 = VelocityHistorySeed(model, "constant", value=0.0)
    config = stepping.StepperConfig(dt=min(dt, 0.4 / model.sqrt_eigenvalues[-1]),
                                    t_end=horizon, stride=5)
    k = np.arange(1, model.n_modes + 1)
    envelope = k ** -2.0

    rates, residuals, trajs = [], [], []
    for _ in range(n_ensemble):
        u0 = rng.standard_normal(model.n_modes) * envelope
        v0 = rng.standard_normal(model.n_modes) * envelope
        norm = model.state_norm(u0, v0)
        u0, v0 = u0 / norm, v0 / norm
        traj = stepping.run(model, zero_cf, zero_df, g0, u0, v0, config)
        norms = traj.state_norms(model)
        _, rate, resid = fit_decay_rate(traj.times, norms,
                                        (0.3 * horizon, horizon))
        rates.append(rate)
        residuals.append(resid)
        trajs.append((traj.times, norms))
    omega_fit = min(rates)
    if omega_fit <= 0.0:
        raise CertificateError("no decay detected; cannot certify")
    omega = 0.95 * omega_fit
    m_raw = max(float(np.max(norms * np.exp(omega * times)))
                for times, norms in trajs)
    M = max(1.0, 1.05 * m_raw)
    return SemigroupEstimate(M=M, omega=omega, provenance="fitted",
                             ensemble_size=n_ensemble,
                             max_residual=max(residuals))


@dataclass
class HypothesisReport:
    tau_bar: float
    K: float
    gamma: float
    omega_prime: float
    passed: bool
    tau_violation_t: float | None = None
    reason: str = ""


def check_hypotheses(cf, df, b, se, horizon=100.0, strategy="auto"):
    """Verify the delay bound and find (gamma, omega') for the smallness
    hypothesis  M b^2 e^{omega tau_bar} int_0^t |k| <= gamma + omega' t.

    Preference order: omega' = 0 with gamma from the L^1 norm when k is
    integrable; for constant k the linear-growth pair (0, slope); else a
    sampled sweep minimizing omega'.
    """
    tau_bar = df.bound
    ts = np.linspace(0.0, horizon, 2001)
    for t in ts:
        if df(t) > tau_bar * (1.0 + 1e-9) + 1e-12:
            return HypothesisReport(tau_bar, math.nan, math.nan, math.nan,
                                    passed=False, tau_violation_t=float(t),
                                    reason="delay exceeds declared bound")

    if cf.kind == "constant":
        K = abs(cf.value) * tau_bar
    elif cf.kind == "exp":
        K = cf.window_integral(0.0, tau_bar)
    else:
        K = max(cf.window_integral(t, tau_bar) for t in ts)

    prefactor = se.M * b * b * math.exp(se.omega * tau_bar)
    if cf.is_zero():
        return HypothesisReport(tau_bar, 0.0, 0.0, 0.0, passed=True)
    if b == 0.0:
        return HypothesisReport(tau_bar, K, 0.0, 0.0, passed=True,
                                reason="empty delay region: feedback vanishes")

    l1 = cf.l1_norm()
    gamma = omega_prime = None
    if strategy in ("auto", "integrable") and math.isfinite(l1):
        gamma, omega_prime = prefactor * l1, 0.0
    elif cf.kind == "constant" and strategy in ("auto", "constant"):
        gamma, omega_prime = 0.0, prefactor * abs(cf.value)
    else:
        # sampled linear feasibility, swept over an omega' grid
        for op in np.linspace(0.0, se.omega, 200, endpoint=False):
            span = 10.0 / max(se.omega - op, 1e-6)
            tg = np.linspace(0.0, span, 1000)
            lhs = np.array([prefactor * cf.cumulative_integral(t) for t in tg])
            slack = lhs - op * tg
            i_max = int(np.argmax(slack))
            if i_max < len(tg) - 1:  # constraint binds at an interior time
                gamma, omega_prime = float(max(slack[i_max], 0.0)), float(op)
                break
    if gamma is None or omega_prime >= se.omega:
        return HypothesisReport(tau_bar, K, math.inf if gamma is None else gamma,
                                math.inf if omega_prime is None else omega_prime,
                                passed=False,
                                reason="no omega' < omega satisfies the "
                                       "delay-coefficient hypothesis")
    return HypothesisReport(tau_bar, K, gamma, omega_prime,
                            passed=omega_prime < se.omega)


@dataclass
class ChainResult:
    T: float
    C_T: float
    rho: float
    C_rho: float
    L_C_rho: float
    cbar_T: float
    binding: str


def compute_T_and_rho(M, omega, omega_prime, gamma, b, K, tau_bar, params,
                      k_total=None):
    """Solve the closed-form constants chain for (T, C_T, rho, C_rho).

    ``params`` is the NonlinearityParams (None for a linear problem, in
    which case rho is unconstrained).  ``k_total`` optionally bounds
    int_0^T |k|; by default it is derived from the verified hypothesis,
    int_0^T |k| <= (gamma + omega' T) / (M b^2 e^{omega tau_bar}).
    """
    if omega_prime >= omega:
        raise CertificateError("omega' must be below omega")
    gap = omega - omega_prime
    ewt = math.exp(omega * tau_bar)
    prefactor = (2.0 * M * M * math.exp(2.0 * gamma)
                 * max(b * b * (1.0 + K * b * b * ewt), 0.25 * ewt)
                 * (1.0 + 4.0 * K * K * b * b * ewt * ewt))
    T = max(math.log(prefactor) / gap, 0.0)
    C_T = prefactor * math.exp(-gap * T)

    if b == 0.0:
        raise CertificateError("degenerate feedback (b = 0): chain unavailable")
    if k_total is None:
        k_total = (gamma + omega_prime * T) / (M * b * b * ewt)
    cbar_T = math.exp(6.0 * b * b * k_total) / (b * b)
    if not math.isfinite(cbar_T):
        raise CertificateError("certificate unavailable: Cbar(T) overflows "
                               "(binding constraint: Gronwall growth)")

    if params is None:
        rho, c_rho, l_c_rho, binding = math.inf, math.inf, 0.0, "none (linear)"
    else:
        bound_small = params.h_inverse(0.5) / (2.0 * b * math.sqrt(cbar_T))
        bound_lip = ((gap / (2.0 * M * params.c_lip)) ** (1.0 / params.beta)
                     / (2.0 * b * math.sqrt(cbar_T)))
        rho = 0.99 * min(bound_small, bound_lip)
        binding = "h-smallness" if bound_small <= bound_lip else "lipschitz-rate"
        if not (rho > 0.0 and math.isfinite(rho)):
            raise CertificateError(
                f"certificate unavailable: rho <= 0 (binding constraint: {binding})")
        c_rho = 2.0 * math.sqrt(cbar_T) * b * rho
        l_c_rho = params.lipschitz(c_rho)
    return ChainResult(T=T, C_T=C_T, rho=rho, C_rho=c_rho, L_C_rho=l_c_rho,
                       cbar_T=cbar_T, binding=binding)


@dataclass
class DataCertification:
    passed: bool
    ball_value: float
    ball_margin: float
    g_max: float
    g_margin: float
    h_check_ok: bool
    detail: str = ""


def certify_initial_data(model, u0, v0, seed, cf, tau_bar, chain, b,
                         params=None):
    """Check the smallness-ball and history-size conditions for (u0, u1, g)."""
    ss = np.linspace(-tau_bar, 0.0, 801) if tau_bar > 0 else np.array([0.0])
    gsq = np.array([seed.w2_norm_sq(s) for s in ss])
    kk = np.array([abs(cf(s)) for s in ss])
    g_int = float(np.trapezoid(kk * gsq, ss)) if tau_bar > 0 else 0.0
    ball = model.h_norm(v0) ** 2 + model.a_half_norm(u0) ** 2 + g_int
    g_max = seed.max_w2_norm(tau_bar)

    rho = chain.rho
    ball_margin = rho ** 2 - ball if math.isfinite(rho) else math.inf
    g_margin = 2.0 * b * rho - g_max if math.isfinite(rho) else math.inf

    # belt-and-braces: h(2 sqrt(Cbar(T) scriptE(0))) < 1/2
    h_ok = True
    if params is not None and math.isfinite(rho):
        from .functionals import psi_value
        e0 = (0.5 * model.h_norm(v0) ** 2 + 0.5 * model.a_half_norm(u0) ** 2
              - psi_value(model, u0, params.beta) + 0.5 * g_int)
        script_e0 = max(0.25 * g_max ** 2, b * b * e0)
        h_ok = params.h(2.0 * math.sqrt(max(chain.cbar_T * script_e0, 0.0))) < 0.5

    passed = ball_margin >= 0.0 and g_margin >= 0.0 and h_ok
    detail = []
    if ball_margin < 0.0:
        detail.append("data outside the rho ball")
    if g_margin < 0.0:
        detail.append("max ||g|| exceeds 2 b rho")
    if not h_ok:
        detail.append("h(2 sqrt(CbarT scriptE0)) >= 1/2")
    return DataCertification(passed, ball, ball_margin, g_max, g_margin,
                             h_ok, "; ".join(detail))


@dataclass
class Certificate:
    semigroup: SemigroupEstimate
    hypotheses: HypothesisReport
    chain: ChainResult
    b: float
    amplitude: float
    data: DataCertification | None = None

    @property
    def rate_r1(self):
        return (self.semigroup.omega - self.hypotheses.omega_prime
                - self.semigroup.M * self.chain.L_C_rho)

    @property
    def rate_r2(self):
        return (self.semigroup.omega - self.hypotheses.omega_prime) / 2.0

    def envelope(self, t, rate="r2"):
        r = self.rate_r2 if rate == "r2" else self.rate_r1
        return self.amplitude * np.exp(-r * np.asarray(t, dtype=float))

    def to_dict(self):
        def num(x):
            return None if x is None or not math.isfinite(x) else float(x)

        d = {
            "M": num(self.semigroup.M),
            "omega": num(self.semigroup.omega),
            "b": num(self.b),
            "K": num(self.hypotheses.K),
            "gamma": num(self.hypotheses.gamma),
            "omega_prime": num(self.hypotheses.omega_prime),
            "T": num(self.chain.T),
            "C_T": num(self.chain.C_T),
            "rho": num(self.chain.rho),
            "C_rho": num(self.chain.C_rho),
            "L_C_rho": num(self.chain.L_C_rho),
            "rate_r1": num(self.rate_r1),
            "rate_r2": num(self.rate_r2),
            "amplitude": num(self.amplitude),
            "semigroup_provenance": self.semigroup.provenance,
            "binding_constraint": self.chain.binding,
        }
        if self.semigroup.ensemble_size is not None:
            d["semigroup_ensemble"] = self.semigroup.ensemble_size
            d["semigroup_fit_residual"] = num(self.semigroup.max_residual)
        if self.data is not None:
            d["data_certified"] = self.data.passed
            d["data_ball_margin"] = num(self.data.ball_margin)
            d["data_g_margin"] = num(self.data.g_margin)
        return d


def predicted_amplitude(model, se, hyp, u0, v0, seed, tau_bar):
    """M e^gamma (||U0|| + e^{omega tau_bar} K max e^{omega s} ||f(s)||)."""
    u0_norm = model.state_norm(np.asarray(u0, float), np.asarray(v0, float))
    ss = np.linspace(-tau_bar, 0.0, 801) if tau_bar > 0 else np.array([0.0])
    g_term = max(math.exp(se.omega * s) * seed.w2_norm(s) for s in ss)
    return (se.M * math.exp(hyp.gamma)
            * (u0_norm + math.exp(se.omega * tau_bar) * hyp.K * g_term))


def build_certificate(model, cf, df, seed, u0, v0, params=None,
                      semigroup=None, horizon=100.0, estimator_kwargs=None):
    """Assemble the full certificate for one scenario.

    Raises CertificateError when the hypotheses fail or the chain is
    unavailable; the caller maps those to exit codes.
    """
    b = model.norm_b()
    se = semigroup or estimate_semigroup(model, **(estimator_kwargs or {}))
    hyp = check_hypotheses(cf, df, b, se, horizon=horizon)
    if not hyp.passed:
        raise HypothesesFailed(hyp)
    chain = compute_T_and_rho(se.M, se.omega, hyp.omega_prime, hyp.gamma, b,
                              hyp.K, df.bound, params)
    amp = predicted_amplitude(model, se, hyp, u0, v0, seed, df.bound)
    cert = Certificate(semigroup=se, hypotheses=hyp, chain=chain, b=b,
                       amplitude=amp)
    cert.data = certify_initial_data(model, u0, v0, seed, cf, df.bound,
                                     chain, b, params)
    return cert


class HypothesesFailed(CertificateError):
    def __init__(self, report):
        super().__init__(report.reason or "delay hypotheses failed")
        self.report = report
