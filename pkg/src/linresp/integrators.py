"""Splitting integrators for underdamped Langevin dynamics.

Elementary flows:
  A: position drift        q <- q + h M^-1 p
  B: force kick            p <- p + h (-grad V(q) + eta F(q, p))
  C: Ornstein-Uhlenbeck    p_i <- a_i p_i + sqrt((1 - a_i^2) m_i / beta) G_i,
                           a_i = exp(-gamma h / m_i)

Schemes compose these flows left to right.  First-order schemes are any
permutation of {a, b, c} with full steps.  Second-order (Strang) schemes:

  bacab: B(h/2) A(h/2) C(h) A(h/2) B(h/2)        one Gaussian vector per step
  abcba: A(h/2) B(h/2) C(h) B(h/2) A(h/2)
  cbabc: C(h/2) B(h/2) A(h) B(h/2) C(h/2)        two independent Gaussians
  cabac: C(h/2) A(h/2) B(h) A(h/2) C(h/2)

Each step consumes exactly D draws (one-Gaussian schemes) or 2D draws
(cbabc/cabac): all components of G first, then all components of G2.
All flows are vectorized: states may hold arrays of shape (..., D), in
which case the Gaussian draws have matching shape.
"""

from __future__ import annotations

import numpy as np

from .model import LangevinModel, PhaseState, wrap_position

FIRST_ORDER_SCHEMES = ("abc", "acb", "bac", "bca", "cab", "cba")
SECOND_ORDER_SCHEMES = ("bacab", "abcba", "cbabc", "cabac")
SCHEMES = FIRST_ORDER_SCHEMES + SECOND_ORDER_SCHEMES

# schemes whose step consumes two independent Gaussian vectors
PAIR_SCHEMES = ("cbabc", "cabac")


def is_second_order(scheme: str) -> bool:
    return scheme in SECOND_ORDER_SCHEMES


def uses_gaussian_pair(scheme: str) -> bool:
    return scheme in PAIR_SCHEMES


def check_scheme(scheme: str) -> str:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    return scheme


class StepRecord:
    """One integrator step: the consumed Gaussians and the states around it.

    gaussians is a single array G for one-Gaussian schemes or a tuple
    (G1, G2) for cbabc/cabac.
    """

    __slots__ = ("gaussians", "state_before", "state_after")

    def __init__(self, gaussians, state_before, state_after):
        self.gaussians = gaussians
        self.state_before = state_before
        self.state_after = state_after


def flow_A(state: PhaseState, h: float, model: LangevinModel) -> PhaseState:
    if h < 0:
        raise ValueError("h must be nonnegative")
    q = wrap_position(state.q + h * state.p / model.mass, model.domain)
    return PhaseState(q, state.p)


def flow_B(state: PhaseState, h: float, eta: float,
           model: LangevinModel) -> PhaseState:
    if h < 0:
        raise ValueError("h must be nonnegative")
    force = -model.potential.grad(state.q)
    if eta != 0.0:
        force = force + eta * model.force.value(state.q, state.p)
    return PhaseState(state.q, state.p + h * force)


def flow_C(state: PhaseState, h: float, G: np.ndarray,
           model: LangevinModel) -> PhaseState:
    if h < 0:
        raise ValueError("h must be nonnegative")
    alpha = np.exp(-model.gamma * h / model.mass)
    noise = np.sqrt((1.0 - alpha * alpha) * model.mass / model.beta)
    return PhaseState(state.q, alpha * state.p + np.asarray(G) * noise)


def _step_plan(scheme: str, h: float):
    """(flow, step size, gaussian slot) triples executed left to right."""
    if scheme in FIRST_ORDER_SCHEMES:
        return tuple((flow, h, 0 if flow == "c" else None) for flow in scheme)
    if scheme in ("bacab", "abcba"):
        sizes = (h / 2, h / 2, h, h / 2, h / 2)
        return tuple((flow, hh, 0 if flow == "c" else None)
                     for flow, hh in zip(scheme, sizes))
    # cbabc / cabac: outer C flows at h/2, the first uses G, the second G2
    sizes = (h / 2, h / 2, h, h / 2, h / 2)
    slot = iter((0, 1))
    return tuple((flow, hh, next(slot) if flow == "c" else None)
                 for flow, hh in zip(scheme, sizes))


def apply_step(scheme: str, state: PhaseState, h: float, eta: float,
               model: LangevinModel, gaussians) -> PhaseState:
    """Advance one step with externally supplied Gaussian draws.

    gaussians: array G, or tuple (G1, G2) for cbabc/cabac.
    """
    check_scheme(scheme)
    if h <= 0:
        raise ValueError("h must be positive")
    gs = gaussians if isinstance(gaussians, tuple) else (gaussians,)
    y = state
    for flow, hh, slot in _step_plan(scheme, h):
        if flow == "a":
            y = flow_A(y, hh, model)
        elif flow == "b":
            y = flow_B(y, hh, eta, model)
        else:
            y = flow_C(y, hh, gs[slot], model)
    return y


def draw_gaussians(scheme: str, shape, rng):
    """Draw the Gaussians one step consumes, in the documented order."""
    if scheme in PAIR_SCHEMES:
        return (rng.standard_normal(shape), rng.standard_normal(shape))
    return rng.standard_normal(shape)


def step(scheme: str, state: PhaseState, h: float, eta: float,
         model: LangevinModel, rng) -> StepRecord:
    """Advance one step of the chosen scheme, recording the Gaussian draws."""
    check_scheme(scheme)
    if h <= 0:
        raise ValueError("h must be positive")
    gaussians = draw_gaussians(scheme, np.shape(state.p), rng)
    after = apply_step(scheme, state, h, eta, model, gaussians)
    return StepRecord(gaussians, state, after)
