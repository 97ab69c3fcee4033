"""Physical systems: potentials, perturbation force fields, observables.

All callables accept phase-space coordinates as numpy arrays whose last
axis has length D, so the same model works for a single state (shape (D,))
and for a whole ensemble of states (shape (M, D)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PhaseState:
    """Position/momentum pair. Arrays of shape (..., D)."""

    q: np.ndarray
    p: np.ndarray

    def copy(self):
        return PhaseState(self.q.copy(), self.p.copy())


@dataclass(frozen=True)
class Domain:
    """Position space: unbounded Euclidean or a torus with given periods."""

    kind: str = "euclidean"  # "euclidean" | "torus"
    periods: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("euclidean", "torus"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "torus":
            per = np.asarray(self.periods, dtype=float)
            if per.ndim != 1 or np.any(per <= 0):
                raise ValueError("torus periods must be a vector of positive reals")
            object.__setattr__(self, "periods", per)


def wrap_position(q, domain: Domain):
    """Reduce each coordinate into [0, L_i) on a torus; identity otherwise."""
    q = np.asarray(q, dtype=float)
    if domain.kind == "euclidean":
        return q
    out = np.mod(q, domain.periods)
    # np.mod(-tiny, L) can round up to exactly L; keep the interval half-open
    return np.where(out == domain.periods, 0.0, out)


@dataclass(frozen=True)
class Potential:
    """Potential energy through its gradient; the value is optional and only
    used for diagnostics."""

    grad: callable
    value: callable | None = None


@dataclass(frozen=True)
class ForceField:
    """Perturbation force F(q, p) with the derivatives needed by the
    second-order weight increments.

    Derivative conventions (all vectorized over leading axes):
      jac_q[..., i, j]   = d F_j / d q_i
      jac_p[..., i, j]   = d F_j / d p_i
      div_p[...]         = sum_i d F_i / d p_i
      grad_p_div_p[..., i] = d(div_p F) / d p_i
      hess_pp[..., i, j, k] = d^2 F_k / (d p_i d p_j)

    For momentum-dependent forces, ``phi`` is the scalar such that
    F = grad_p phi; it is required by the second-order weight.
    """

    value: callable
    jac_q: callable
    jac_p: callable | None = None
    div_p: callable | None = None
    grad_p_div_p: callable | None = None
    hess_pp: callable | None = None
    p_dependent: bool = False
    phi: callable | None = None


def position_force(value, jac_q) -> ForceField:
    """Force field depending on q only; all momentum derivatives vanish."""

    def jac_p(q, p):
        D = np.asarray(q).shape[-1]
        return np.zeros(np.asarray(q).shape[:-1] + (D, D))

    def div_p(q, p):
        return np.zeros(np.asarray(q).shape[:-1])

    def grad_p_div_p(q, p):
        return np.zeros(np.asarray(q).shape)

    def hess_pp(q, p):
        D = np.asarray(q).shape[-1]
        return np.zeros(np.asarray(q).shape[:-1] + (D, D, D))

    return ForceField(value=value, jac_q=jac_q, jac_p=jac_p, div_p=div_p,
                      grad_p_div_p=grad_p_div_p, hess_pp=hess_pp,
                      p_dependent=False, phi=None)


@dataclass(frozen=True)
class Observable:
    name: str
    f: callable


@dataclass(frozen=True)
class LangevinModel:
    """Underdamped Langevin system with an optional perturbation force.

    mass is the diagonal of the (diagonal) mass matrix.
    """

    dim: int
    beta: float
    gamma: float
    mass: np.ndarray
    domain: Domain
    potential: Potential
    force: ForceField
    observables: tuple = ()

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0:
            raise ValueError("beta and gamma must be positive")
        mass = np.asarray(self.mass, dtype=float)
        if mass.shape != (self.dim,) or np.any(mass <= 0):
            raise ValueError("mass must be a positive vector of length dim")
        object.__setattr__(self, "mass", mass)

    def observable(self, name: str) -> Observable:
        for obs in self.observables:
            if obs.name == name:
                return obs
        raise KeyError(f"no observable named {name!r}")


def validate_force_derivatives(model: LangevinModel, n_points: int = 100,
                               step: float = 1e-4, tol: float = 1e-5,
                               seed: int = 0) -> dict:
    """Check the analytic force derivatives against central finite
    differences of ``force.value`` at random phase points.

    Returns a report dict with the max absolute error per derivative field,
    a "passed" flag and, on failure, which field and point are worst.
    """
    if n_points < 1 or step <= 0 or tol <= 0:
        raise ValueError("n_points >= 1, step > 0 and tol > 0 required")
    rng = np.random.default_rng(seed)
    F = model.force
    D = model.dim
    errors = {k: 0.0 for k in
              ("jac_q", "jac_p", "div_p", "grad_p_div_p", "hess_pp")}
    worst = {}

    for _ in range(n_points):
        q = rng.uniform(-2.0, 2.0, D)
        if model.domain.kind == "torus":
            q = rng.uniform(0.0, 1.0, D) * model.domain.periods
        p = rng.uniform(-2.0, 2.0, D)

        def record(field_name, err, where):
            if err > errors[field_name]:
                errors[field_name] = err
                worst[field_name] = where

        # first derivatives
        jq = np.empty((D, D))
        jp = np.empty((D, D))
        for i in range(D):
            dq = np.zeros(D)
            dq[i] = step
            jq[i] = (F.value(q + dq, p) - F.value(q - dq, p)) / (2 * step)
            jp[i] = (F.value(q, p + dq) - F.value(q, p - dq)) / (2 * step)
        record("jac_q", np.max(np.abs(jq - F.jac_q(q, p))), (q, p))
        record("jac_p", np.max(np.abs(jp - F.jac_p(q, p))), (q, p))
        record("div_p", abs(np.trace(jp) - F.div_p(q, p)), (q, p))

        # gradient of the momentum divergence
        gdiv = np.empty(D)
        for i in range(D):
            dp = np.zeros(D)
            dp[i] = step
            trp = 0.0
            trm = 0.0
            for j in range(D):
                ej = np.zeros(D)
                ej[j] = step
                trp += ((F.value(q, p + dp + ej) - F.value(q, p + dp - ej))
                        / (2 * step))[j]
                trm += ((F.value(q, p - dp + ej) - F.value(q, p - dp - ej))
                        / (2 * step))[j]
            gdiv[i] = (trp - trm) / (2 * step)
        record("grad_p_div_p", np.max(np.abs(gdiv - F.grad_p_div_p(q, p))), (q, p))

        # second momentum derivatives
        hess = np.empty((D, D, D))
        for i in range(D):
            for j in range(D):
                ei = np.zeros(D)
                ei[i] = step
                ej = np.zeros(D)
                ej[j] = step
                hess[i, j] = (F.value(q, p + ei + ej) - F.value(q, p + ei - ej)
                              - F.value(q, p - ei + ej) + F.value(q, p - ei - ej)
                              ) / (4 * step * step)
        record("hess_pp", np.max(np.abs(hess - F.hess_pp(q, p))), (q, p))

    passed = all(err <= tol for err in errors.values())
    report = {"passed": passed, "max_errors": errors, "tol": tol}
    if not passed:
        report["failures"] = {k: worst[k] for k, e in errors.items() if e > tol}
    return report


# ---------------------------------------------------------------------------
# built-in benchmark systems


def example1_model(beta: float = 1.0, gamma: float = 1.0,
                   omega: float = 1.0) -> LangevinModel:
    """2D harmonic oscillator; the perturbation softens the spring.

    V(q) = omega |q|^2 / 2, F(q) = q, observable f(q) = |q|^2.
    """
    D = 2

    def grad(q):
        return omega * np.asarray(q, dtype=float)

    def value(q):
        return 0.5 * omega * np.sum(np.square(q), axis=-1)

    force = position_force(
        value=lambda q, p: np.asarray(q, dtype=float) + 0.0 * np.asarray(p),
        jac_q=lambda q, p: np.broadcast_to(
            np.eye(D), np.asarray(q).shape[:-1] + (D, D)).copy(),
    )
    obs = (Observable("qsq", lambda q, p: np.sum(np.square(q), axis=-1)),)
    return LangevinModel(dim=D, beta=beta, gamma=gamma, mass=np.ones(D),
                         domain=Domain("euclidean"),
                         potential=Potential(grad=grad, value=value),
                         force=force, observables=obs)


def example2_model(beta: float = 1.0, gamma: float = 1.0) -> LangevinModel:
    """2D harmonic oscillator with a momentum perturbation F(p) = p,
    i.e. F = grad_p phi with phi = |p|^2 / 2.

    Observables: f1 = q1^2 + q2^2, f2 = p1^4 + p2^4.
    """
    D = 2

    def grad(q):
        return np.asarray(q, dtype=float)

    def value(q):
        return 0.5 * np.sum(np.square(q), axis=-1)

    def fvalue(q, p):
        return np.asarray(p, dtype=float) + 0.0 * np.asarray(q)

    def jac_q(q, p):
        return np.zeros(np.asarray(q).shape[:-1] + (D, D))

    def jac_p(q, p):
        return np.broadcast_to(np.eye(D),
                               np.asarray(q).shape[:-1] + (D, D)).copy()

    def div_p(q, p):
        return np.full(np.asarray(q).shape[:-1], float(D))

    def grad_p_div_p(q, p):
        return np.zeros(np.asarray(q).shape)

    def hess_pp(q, p):
        return np.zeros(np.asarray(q).shape[:-1] + (D, D, D))

    force = ForceField(value=fvalue, jac_q=jac_q, jac_p=jac_p, div_p=div_p,
                       grad_p_div_p=grad_p_div_p, hess_pp=hess_pp,
                       p_dependent=True,
                       phi=lambda q, p: 0.5 * np.sum(np.square(p), axis=-1))
    obs = (
        Observable("f1", lambda q, p: np.sum(np.square(q), axis=-1)),
        Observable("f2", lambda q, p: np.sum(np.asarray(p) ** 4, axis=-1)),
    )
    return LangevinModel(dim=D, beta=beta, gamma=gamma, mass=np.ones(D),
                         domain=Domain("euclidean"),
                         potential=Potential(grad=grad, value=value),
                         force=force, observables=obs)


def example3_model(beta: float = 1.0, gamma: float = 1.0) -> LangevinModel:
    """Mobility in a 2D periodic potential on the torus (2 pi)^2.

    V(q) = 2 cos(2 q1) + cos(q2), constant pulling force F = (1, 0),
    observable f = p1 (velocity in the pulled direction, unit masses).
    """
    D = 2
    two_pi = 2.0 * np.pi

    def grad(q):
        q = np.asarray(q, dtype=float)
        return np.stack([-4.0 * np.sin(2.0 * q[..., 0]),
                         -np.sin(q[..., 1])], axis=-1)

    def value(q):
        q = np.asarray(q, dtype=float)
        return 2.0 * np.cos(2.0 * q[..., 0]) + np.cos(q[..., 1])

    def fvalue(q, p):
        out = np.zeros(np.broadcast(np.asarray(q), np.asarray(p)).shape)
        out[..., 0] = 1.0
        return out

    force = position_force(
        value=fvalue,
        jac_q=lambda q, p: np.zeros(np.asarray(q).shape[:-1] + (D, D)),
    )
    obs = (Observable("velocity1", lambda q, p: np.asarray(p)[..., 0]),)
    return LangevinModel(dim=D, beta=beta, gamma=gamma, mass=np.ones(D),
                         domain=Domain("torus", periods=np.full(D, two_pi)),
                         potential=Potential(grad=grad, value=value),
                         force=force, observables=obs)


BUILTIN_MODELS = {
    "example1": example1_model,
    "example2": example2_model,
    "example3": example3_model,
}
