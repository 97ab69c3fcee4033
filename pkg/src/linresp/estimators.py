"""Linear-response estimators for Langevin dynamics.

Three families:

* Martingale-product (MP): the centered time average of an observable is
  multiplied by an auxiliary mean-zero martingale z^N built from the
  Gaussian draws of the integrator.  First-order (MP1) and second-order
  (MP2) weight increments are provided, the latter matched to the active
  second-order scheme.

* Green-Kubo (GK): time quadrature (Riemann = GK1, trapezoid = GK2) of the
  equilibrium correlation between the observable along the trajectory and
  the conjugate response function phi at the initial state.

* NEMD: finite difference of steady-state averages between perturbed and
  unperturbed dynamics, optionally driven by common random numbers.  Used
  as the ground-truth oracle.

The heavy loops are vectorized: a whole block of realizations advances as
one ensemble state of shape (block, D), one random stream per block.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .integrators import (PAIR_SCHEMES, SECOND_ORDER_SCHEMES, StepRecord,
                          apply_step, check_scheme, draw_gaussians, step)
from .model import LangevinModel, PhaseState
from .statistics import StreamSpec, covariance_with_stderr, derive_stream

DEFAULT_BLOCK_SIZE = 50_000

MP_WEIGHTS = ("mp1", "mp2")


class ConfigurationError(ValueError):
    """Invalid estimator/scheme/force combination."""


@dataclass
class TrajectoryStats:
    """Per-realization accumulation results."""

    f_bar: dict
    z_final: float
    phi_y0: float | None = None
    checkpoints: list = field(default_factory=list)


@dataclass
class EstimatorOutput:
    estimate: float
    stderr: float
    n_realizations: int
    variance_vs_time: list = field(default_factory=list)


def initial_state(model: LangevinModel, n: int | None = None) -> PhaseState:
    """Deterministic start: domain center, zero momentum."""
    shape = (model.dim,) if n is None else (n, model.dim)
    q = np.zeros(shape)
    if model.domain.kind == "torus":
        q = q + model.domain.periods / 2.0
    return PhaseState(q, np.zeros(shape))


# ---------------------------------------------------------------------------
# weight-process increments


def mp1_increment(model: LangevinModel, record: StepRecord, h: float,
                  scale: float = 1.0):
    """First-order weight increment, sqrt(h)-term only.

    One-Gaussian schemes: sqrt(h beta / (2 gamma)) F(y)^T G.
    Two-Gaussian schemes: (1/2) sqrt(h beta / gamma) F(y)^T (G1 + G2).
    """
    y = record.state_before
    F = model.force.value(y.q, y.p)
    if isinstance(record.gaussians, tuple):
        G1, G2 = record.gaussians
        coeff = 0.5 * math.sqrt(h * model.beta / model.gamma)
        return scale * coeff * np.sum(F * (G1 + G2), axis=-1)
    coeff = math.sqrt(h * model.beta / (2.0 * model.gamma))
    return scale * coeff * np.sum(F * record.gaussians, axis=-1)


def mp2_increment_bacab(model: LangevinModel, record: StepRecord, h: float,
                        scale: float = 1.0):
    """Second-order weight increment for the bacab/abcba schemes.

    Position-only force:
      sqrt(beta/(2 gamma)) [ sqrt(h) F^T G
                             + (h^{3/2}/2) (M^-1 p)^T Jq F G ].
    Momentum-dependent force F = grad_p phi: additional O(h) trace term and
    h^{3/2} corrections involving the momentum derivatives of F.
    """
    if isinstance(record.gaussians, tuple):
        raise ConfigurationError("bacab weight needs a one-Gaussian step")
    y = record.state_before
    G = record.gaussians
    force = model.force
    beta, gamma = model.beta, model.gamma
    F = force.value(y.q, y.p)
    jac_q = force.jac_q(y.q, y.p)
    minv_p = y.p / model.mass
    root = math.sqrt(beta / (2.0 * gamma))
    sqrt_h = math.sqrt(h)

    lead = sqrt_h * np.sum(F * G, axis=-1)
    drift = 0.5 * h * sqrt_h * np.einsum("...i,...ij,...j->...",
                                         minv_p, jac_q, G)
    if not force.p_dependent:
        return scale * root * (lead + drift)

    if force.phi is None:
        raise ConfigurationError(
            "second-order weight for a momentum-dependent force requires "
            "the force field to provide phi with F = grad_p phi")
    jac_p = force.jac_p(y.q, y.p)
    grad_v = model.potential.grad(y.q)
    trace_term = 0.5 * h * (np.einsum("...ij,...i,...j->...", jac_p, G, G)
                            - force.div_p(y.q, y.p))
    kick = grad_v + gamma * minv_p
    corr_p = np.einsum("...i,...ij,...j->...", kick, jac_p, G)
    hess = force.hess_pp(y.q, y.p)
    third = (np.einsum("...ijk,...i,...j,...k->...", hess, G, G, G) / 3.0
             - 0.5 * np.sum(force.grad_p_div_p(y.q, y.p) * G, axis=-1))
    out = (root * lead
           + trace_term
           + 0.5 * h * sqrt_h * root * (np.einsum("...i,...ij,...j->...",
                                                  minv_p, jac_q, G) - corr_p)
           + 0.5 * h * sqrt_h * math.sqrt(2.0 * gamma / beta) * third)
    return scale * out


def mp2_increment_cbabc(model: LangevinModel, record: StepRecord, h: float,
                        scale: float = 1.0):
    """Second-order weight increment for the cbabc/cabac schemes
    (position-only forces)."""
    if not isinstance(record.gaussians, tuple):
        raise ConfigurationError("cbabc weight needs a two-Gaussian step")
    if model.force.p_dependent:
        raise ConfigurationError(
            "no second-order cbabc weight for momentum-dependent forces")
    y = record.state_before
    G1, G2 = record.gaussians
    beta, gamma = model.beta, model.gamma
    F = model.force.value(y.q, y.p)
    jac_q = model.force.jac_q(y.q, y.p)
    minv_p = y.p / model.mass
    root = math.sqrt(beta / gamma)
    sqrt_h = math.sqrt(h)
    gsum = G1 + G2
    gdiff = G1 - G2

    lead = 0.5 * sqrt_h * np.sum(F * gsum, axis=-1)
    bracket = (np.einsum("...i,...ij,...j->...", minv_p, jac_q, gsum)
               + np.einsum("...i,...ji,...j->...",
                           y.p, jac_q, gdiff / model.mass)
               - 0.5 * gamma * np.sum(F * gdiff / model.mass, axis=-1))
    return scale * root * (lead + 0.25 * h * sqrt_h * bracket)


def weight_increment(model: LangevinModel, scheme: str, weight: str,
                     record: StepRecord, h: float, scale: float = 1.0):
    """Weight increment matched to (scheme, weight kind)."""
    if weight not in MP_WEIGHTS:
        raise ConfigurationError(f"unknown weight kind {weight!r}")
    if weight == "mp1":
        return mp1_increment(model, record, h, scale)
    if scheme not in SECOND_ORDER_SCHEMES:
        raise ConfigurationError(
            f"mp2 weight requires a second-order scheme, got {scheme!r}")
    if scheme in PAIR_SCHEMES:
        return mp2_increment_cbabc(model, record, h, scale)
    return mp2_increment_bacab(model, record, h, scale)


def check_mp_config(model: LangevinModel, scheme: str, weight: str):
    """Raise early on invalid (model, scheme, weight) combinations."""
    check_scheme(scheme)
    if weight not in MP_WEIGHTS:
        raise ConfigurationError(f"unknown weight kind {weight!r}")
    if weight == "mp2":
        if scheme not in SECOND_ORDER_SCHEMES:
            raise ConfigurationError(
                f"mp2 weight requires a second-order scheme, got {scheme!r}")
        if scheme in PAIR_SCHEMES and model.force.p_dependent:
            raise ConfigurationError(
                "no second-order cbabc weight for momentum-dependent forces")
        if model.force.p_dependent and model.force.phi is None:
            raise ConfigurationError("momentum-dependent force without phi")


# ---------------------------------------------------------------------------
# MP estimator


def run_mp_realization(model: LangevinModel, scheme: str, weight: str,
                       h: float, N: int, N_burn: int, rng,
                       checkpoint_steps=(), weight_scale: float = 1.0
                       ) -> TrajectoryStats:
    """One realization: burn in, then accumulate the observable time
    averages (at the pre-step states) and the weight process."""
    check_mp_config(model, scheme, weight)
    if N < 1 or N_burn < 0:
        raise ValueError("N >= 1 and N_burn >= 0 required")
    state = initial_state(model)
    for _ in range(N_burn):
        state = step(scheme, state, h, 0.0, model, rng).state_after

    names = [obs.name for obs in model.observables]
    f_sum = {name: 0.0 for name in names}
    z = 0.0
    checkpoint_steps = sorted(checkpoint_steps)
    checkpoints = []
    ck = 0
    for n in range(N):
        for obs in model.observables:
            f_sum[obs.name] += float(obs.f(state.q, state.p))
        rec = step(scheme, state, h, 0.0, model, rng)
        z += float(weight_increment(model, scheme, weight, rec, h,
                                    weight_scale))
        state = rec.state_after
        while ck < len(checkpoint_steps) and checkpoint_steps[ck] == n + 1:
            partial = {k: v / (n + 1) for k, v in f_sum.items()}
            checkpoints.append((n + 1, partial, z, None))
            ck += 1
    f_bar = {k: v / N for k, v in f_sum.items()}
    return TrajectoryStats(f_bar=f_bar, z_final=z, checkpoints=checkpoints)


def _mp_block(model, scheme, weights, h, N, N_burn, block, stream_spec,
              weight_scale, checkpoint_steps):
    """Advance one ensemble block shared by several weight kinds; returns
    per-realization f-bars (dict of arrays), final z values per weight,
    and per-checkpoint partials."""
    rng = derive_stream(stream_spec)
    state = initial_state(model, block)
    shape = state.p.shape
    for _ in range(N_burn):
        gs = draw_gaussians(scheme, shape, rng)
        state = apply_step(scheme, state, h, 0.0, model, gs)

    f_sum = {obs.name: np.zeros(block) for obs in model.observables}
    z = {w: np.zeros(block) for w in weights}
    cps = sorted(checkpoint_steps)
    cp_out = []
    ck = 0
    for n in range(N):
        for obs in model.observables:
            f_sum[obs.name] += obs.f(state.q, state.p)
        gs = draw_gaussians(scheme, shape, rng)
        after = apply_step(scheme, state, h, 0.0, model, gs)
        rec = StepRecord(gs, state, after)
        for w in weights:
            z[w] += weight_increment(model, scheme, w, rec, h, weight_scale)
        state = after
        while ck < len(cps) and cps[ck] == n + 1:
            cp_out.append((n + 1,
                           {k: v / (n + 1) for k, v in f_sum.items()},
                           {w: z[w].copy() for w in weights}))
            ck += 1
    f_bar = {k: v / N for k, v in f_sum.items()}
    return f_bar, z, cp_out


def _run_blocks(worker, M, block_size, workers):
    """Split M realizations into fixed-size blocks, run them (possibly on a
    thread pool), return results in ascending block order."""
    blocks = []
    start = 0
    idx = 0
    while start < M:
        blocks.append((idx, min(block_size, M - start)))
        start += block_size
        idx += 1
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda b: worker(*b), blocks))
    return [worker(*b) for b in blocks]


def estimate_mp_weights(model: LangevinModel, scheme: str, weights,
                        h: float, N: int, N_burn: int, M: int, seed: int,
                        checkpoint_steps=(), weight_scale: float = 1.0,
                        block_size: int = DEFAULT_BLOCK_SIZE,
                        workers: int = 1) -> dict:
    """MP estimates for several weight kinds and every observable, sharing
    one set of trajectories.  Returns {weight: {observable: output}}."""
    weights = tuple(weights)
    for w in weights:
        check_mp_config(model, scheme, w)
    if M < 2:
        raise ValueError("need at least 2 realizations")

    def worker(idx, n_block):
        return _mp_block(model, scheme, weights, h, N, N_burn, n_block,
                         StreamSpec(seed, idx), weight_scale,
                         checkpoint_steps)

    parts = _run_blocks(worker, M, block_size, workers)
    names = [obs.name for obs in model.observables]
    f_bar = {k: np.concatenate([p[0][k] for p in parts]) for k in names}
    out = {}
    for w in weights:
        z = np.concatenate([p[1][w] for p in parts])
        out[w] = {}
        for name in names:
            est, se = covariance_with_stderr(f_bar[name], z)
            vvt = []
            for i_cp in range(len(parts[0][2])):
                n_k = parts[0][2][i_cp][0]
                fk = np.concatenate([p[2][i_cp][1][name] for p in parts])
                zk = np.concatenate([p[2][i_cp][2][w] for p in parts])
                prod = (fk - fk.mean()) * (zk - zk.mean())
                vvt.append((n_k * h, float(prod.var(ddof=1))))
            out[w][name] = EstimatorOutput(estimate=float(est),
                                           stderr=float(se),
                                           n_realizations=M,
                                           variance_vs_time=vvt)
    return out


def estimate_mp_multi(model: LangevinModel, scheme: str, weight: str,
                      h: float, N: int, N_burn: int, M: int, seed: int,
                      checkpoint_steps=(), weight_scale: float = 1.0,
                      block_size: int = DEFAULT_BLOCK_SIZE,
                      workers: int = 1) -> dict:
    """MP estimate for every observable of the model from one shared set of
    trajectories.  Returns {observable name: EstimatorOutput}."""
    return estimate_mp_weights(model, scheme, (weight,), h, N, N_burn, M,
                               seed, checkpoint_steps, weight_scale,
                               block_size, workers)[weight]


def estimate_mp(model: LangevinModel, scheme: str, weight: str, h: float,
                N: int, N_burn: int, M: int, seed: int,
                observable: str | None = None, checkpoint_steps=(),
                weight_scale: float = 1.0,
                block_size: int = DEFAULT_BLOCK_SIZE,
                workers: int = 1) -> EstimatorOutput:
    """MP estimate of the linear response of one observable."""
    all_out = estimate_mp_multi(model, scheme, weight, h, N, N_burn, M,
                                seed, checkpoint_steps, weight_scale,
                                block_size, workers)
    if observable is None:
        observable = model.observables[0].name
    return all_out[observable]


# ---------------------------------------------------------------------------
# Green-Kubo estimator


def phi_gk(model: LangevinModel):
    """Conjugate response function phi = beta p^T M^-1 F - div_p F."""

    def phi(q, p):
        F = model.force.value(q, p)
        out = model.beta * np.sum(p / model.mass * F, axis=-1)
        return out - model.force.div_p(q, p)

    return phi


def _gk_block(model, scheme, rule, h, N, N_burn, block, stream_spec,
              obs_f, checkpoint_steps):
    rng = derive_stream(stream_spec)
    state = initial_state(model, block)
    shape = state.p.shape
    for _ in range(N_burn):
        gs = draw_gaussians(scheme, shape, rng)
        state = apply_step(scheme, state, h, 0.0, model, gs)

    phi = phi_gk(model)
    phi0 = np.asarray(phi(state.q, state.p), dtype=float) + np.zeros(block)
    f0 = np.asarray(obs_f(state.q, state.p), dtype=float) + np.zeros(block)
    half = 0.5 if rule == "trapezoid" else 0.0
    s_f = np.zeros(block)   # plain Riemann sum; the rule is applied at the end
    f_total = 0.0           # running grand total of f for auto-centering
    cps = sorted(checkpoint_steps)
    cp_out = []
    ck = 0
    for n in range(N):
        fv = obs_f(state.q, state.p)
        s_f += fv
        f_total += float(np.sum(fv))
        gs = draw_gaussians(scheme, shape, rng)
        state = apply_step(scheme, state, h, 0.0, model, gs)
        while ck < len(cps) and cps[ck] == n + 1:
            cp_out.append((n + 1, h * (s_f - half * f0) * phi0, (n + 1) - half))
            ck += 1
    return (h * (s_f - half * f0) * phi0, h * (N - half) * phi0, f_total,
            cp_out, phi0, f0)


def gk_components(model: LangevinModel, scheme: str, rule: str, h: float,
                  N: int, N_burn: int, M: int, seed: int,
                  observable: str | None = None, checkpoint_steps=(),
                  block_size: int = DEFAULT_BLOCK_SIZE, workers: int = 1
                  ) -> dict:
    """Per-realization Green-Kubo ingredients, before centering.

    Returns arrays "weighted_sum" (h * quadrature sum of f * phi0),
    "center_sum" (h * total quadrature weight * phi0), "phi0", "f0",
    the grand f total, and per-checkpoint partial weighted sums.
    """
    check_scheme(scheme)
    if rule not in ("riemann", "trapezoid"):
        raise ConfigurationError(f"unknown quadrature rule {rule!r}")
    if M < 2:
        raise ValueError("need at least 2 realizations")
    if h <= 0:
        raise ValueError("h must be positive")
    obs = (model.observable(observable) if observable
           else model.observables[0])

    def worker(idx, n_block):
        return _gk_block(model, scheme, rule, h, N, N_burn, n_block,
                         StreamSpec(seed, idx), obs.f, checkpoint_steps)

    parts = _run_blocks(worker, M, block_size, workers)
    comp = {
        "weighted_sum": np.concatenate([p[0] for p in parts]),
        "center_sum": np.concatenate([p[1] for p in parts]),
        "phi0": np.concatenate([p[4] for p in parts]),
        "f0": np.concatenate([p[5] for p in parts]),
        "f_total": sum(p[2] for p in parts),
        "n_recorded": M * N,
    }
    comp["checkpoints"] = [
        (parts[0][3][i][0], parts[0][3][i][2],
         np.concatenate([p[3][i][1] for p in parts]))
        for i in range(len(parts[0][3]))
    ]
    return comp


def estimate_gk(model: LangevinModel, scheme: str, rule: str, h: float,
                N: int, N_burn: int, M: int, seed: int,
                center="auto", observable: str | None = None,
                checkpoint_steps=(), block_size: int = DEFAULT_BLOCK_SIZE,
                workers: int = 1) -> EstimatorOutput:
    """Green-Kubo estimate: correlate the observable time integral with phi
    at the (equilibrated) initial state.

    rule "riemann" weighs all N recorded states equally; "trapezoid" halves
    the first one.  center is a known constant or "auto", the grand mean of
    f over every recorded state of every realization (applied exactly: the
    center enters the estimator linearly).
    """
    comp = gk_components(model, scheme, rule, h, N, N_burn, M, seed,
                         observable, checkpoint_steps, block_size, workers)
    if center == "auto":
        c = comp["f_total"] / comp["n_recorded"]
    else:
        c = float(center)
    values = comp["weighted_sum"] - c * comp["center_sum"]
    est = values.mean()
    se = values.std(ddof=1) / math.sqrt(M)
    vvt = []
    for n_k, w_sum, Ak in comp["checkpoints"]:
        Vk = Ak - c * h * w_sum * comp["phi0"]
        vvt.append((n_k * h, float(Vk.var(ddof=1))))
    return EstimatorOutput(estimate=float(est), stderr=float(se),
                           n_realizations=M, variance_vs_time=vvt)


# ---------------------------------------------------------------------------
# NEMD finite-difference oracle


def _nemd_block(model, scheme, h, N, N_burn, block, stream_spec, etas,
                coupled, names):
    rng = derive_stream(stream_spec)
    states = [initial_state(model, block) for _ in etas]
    shape = states[0].p.shape
    for _ in range(N_burn):
        if coupled:
            gs = draw_gaussians(scheme, shape, rng)
            states = [apply_step(scheme, s, h, e, model, gs)
                      for s, e in zip(states, etas)]
        else:
            states = [apply_step(scheme, s, h, e, model,
                                 draw_gaussians(scheme, shape, rng))
                      for s, e in zip(states, etas)]
    f_sums = [{name: np.zeros(block) for name in names} for _ in etas]
    for n in range(N):
        for s, sums in zip(states, f_sums):
            for obs in model.observables:
                if obs.name in sums:
                    sums[obs.name] += obs.f(s.q, s.p)
        if coupled:
            gs = draw_gaussians(scheme, shape, rng)
            states = [apply_step(scheme, s, h, e, model, gs)
                      for s, e in zip(states, etas)]
        else:
            states = [apply_step(scheme, s, h, e, model,
                                 draw_gaussians(scheme, shape, rng))
                      for s, e in zip(states, etas)]
    return f_sums


def estimate_nemd_multi(model: LangevinModel, scheme: str, eta: float,
                        h: float, N: int, N_burn: int, M: int, seed: int,
                        coupled: bool = True, mode: str = "forward",
                        block_size: int = DEFAULT_BLOCK_SIZE,
                        workers: int = 1) -> dict:
    """Finite-difference response for every observable.

    mode "forward": (fbar_eta - fbar_0) / eta.
    mode "central": (fbar_eta - fbar_-eta) / (2 eta), which removes the
    first-order truncation error in eta.
    """
    check_scheme(scheme)
    if eta == 0:
        raise ValueError("eta must be nonzero")
    if mode not in ("forward", "central"):
        raise ValueError(f"unknown NEMD mode {mode!r}")
    if M < 2:
        raise ValueError("need at least 2 realizations")
    etas = (eta, -eta) if mode == "central" else (eta, 0.0)
    denom = 2 * eta if mode == "central" else eta
    names = [obs.name for obs in model.observables]

    def worker(idx, n_block):
        return _nemd_block(model, scheme, h, N, N_burn, n_block,
                           StreamSpec(seed, idx), etas, coupled, names)

    parts = _run_blocks(worker, M, block_size, workers)
    out = {}
    for name in names:
        hi = np.concatenate([p[0][name] for p in parts]) / N
        lo = np.concatenate([p[1][name] for p in parts]) / N
        d = (hi - lo) / denom
        out[name] = EstimatorOutput(estimate=float(d.mean()),
                                    stderr=float(d.std(ddof=1) / math.sqrt(M)),
                                    n_realizations=M)
    return out


def estimate_nemd(model: LangevinModel, scheme: str, eta: float, h: float,
                  N: int, N_burn: int, M: int, seed: int,
                  coupled: bool = True, mode: str = "forward",
                  observable: str | None = None,
                  block_size: int = DEFAULT_BLOCK_SIZE,
                  workers: int = 1) -> EstimatorOutput:
    all_out = estimate_nemd_multi(model, scheme, eta, h, N, N_burn, M, seed,
                                  coupled, mode, block_size, workers)
    if observable is None:
        observable = model.observables[0].name
    return all_out[observable]
