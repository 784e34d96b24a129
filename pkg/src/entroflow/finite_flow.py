"""Finite-dimensional gradient flow dx/dt = -grad E with decay diagnostics.

For a C^2 potential E with Hess E >= rho Id (rho > 0) the flow S_t
satisfies the chain of facts this module checks numerically:

* d/dt E(S_t) = -|grad E(S_t)|^2                    (dissipation identity)
* |grad E(S_t)|^2 <= exp(-2 rho t) |grad E(x0)|^2   (production decay)
* E(S_t) - E(beta) <= exp(-2 rho t) (E(x0)-E(beta)) (energy decay)
* E(x) - E(beta) <= |grad E(x)|^2 / (2 rho)         (energy-production bound)

Trajectories are integrated with classical fixed-step RK4; the oracle for
its accuracy is step-halving self-convergence (no stiffness at the
rho-convex potentials in the built-in bank).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .grids import fmt_float

DIVERGENCE_LIMIT = 1e12


class FlowDivergence(RuntimeError):
    """State norm blew up: non-coercive or mis-specified potential."""


@dataclass(frozen=True)
class PotentialSpec:
    """Potential E with gradient/Hessian callables and convexity constant rho."""

    name: str
    dim: int
    energy: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    rho: float
    minimizer: np.ndarray | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.rho <= 0.0:
            raise ValueError("rho must be positive")
        if self.minimizer is not None:
            m = np.asarray(self.minimizer, dtype=float)
            if m.shape != (self.dim,):
                raise ValueError("minimizer has the wrong dimension")
            object.__setattr__(self, "minimizer", m)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (num_times, dim)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if abs(self.times[0]) > 1e-15 or np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must start at 0 and strictly increase")


def validate_potential(spec: PotentialSpec, box: np.ndarray, seed: int = 0,
                       samples: int = 32) -> None:
    """Spot-check grad consistency (FD, rel err <= 1e-5) and Hess >= rho Id.

    ``box`` is a (dim, 2) array of coordinate bounds, e.g. the bounding box
    of a computed trajectory.
    """
    box = np.atleast_2d(np.asarray(box, dtype=float))
    rng = np.random.default_rng(seed)
    eps = 1e-6
    for _ in range(samples):
        x = rng.uniform(box[:, 0], box[:, 1])
        g = np.asarray(spec.grad(x))
        fd = np.empty(spec.dim)
        for i in range(spec.dim):
            step = np.zeros(spec.dim)
            step[i] = eps * max(1.0, abs(x[i]))
            fd[i] = (spec.energy(x + step) - spec.energy(x - step)) / (2.0 * step[i])
        scale = max(1.0, float(np.linalg.norm(g)))
        if np.linalg.norm(fd - g) > 1e-5 * scale:
            raise ValueError(f"{spec.name}: gradient inconsistent with energy at {x}")
        eigs = np.linalg.eigvalsh(np.atleast_2d(spec.hess(x)))
        if eigs.min() < spec.rho - 1e-9:
            raise ValueError(f"{spec.name}: Hessian eigenvalue {eigs.min()} "
                             f"below rho={spec.rho} at {x}")


def integrate_flow(spec: PotentialSpec, x0, dt: float, horizon: float) -> Trajectory:
    """Classical RK4 trajectory of dx/dt = -grad E from x0."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if horizon < dt:
        raise ValueError("horizon must cover at least one step")
    x = np.asarray(x0, dtype=float).reshape(spec.dim)
    steps = int(round(horizon / dt))
    states = np.empty((steps + 1, spec.dim))
    states[0] = x

    def rhs(y):
        return -np.asarray(spec.grad(y))

    for k in range(steps):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * dt * k1)
        k3 = rhs(x + 0.5 * dt * k2)
        k4 = rhs(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.linalg.norm(x) > DIVERGENCE_LIMIT:
            raise FlowDivergence(f"{spec.name}: state norm exceeded "
                                 f"{DIVERGENCE_LIMIT:g} at step {k + 1}")
        states[k + 1] = x
    times = dt * np.arange(steps + 1)
    final_grad = float(np.linalg.norm(spec.grad(x)))
    return Trajectory(times, states,
                      metadata={"solver": "rk4", "dt": dt,
                                "final_grad_norm": final_grad})


def locate_minimizer(spec: PotentialSpec, x0=None) -> np.ndarray:
    """Run the flow to T = 20/rho, then one Newton polish."""
    if spec.minimizer is not None:
        return spec.minimizer
    start = np.zeros(spec.dim) if x0 is None else np.asarray(x0, dtype=float)
    horizon = 20.0 / spec.rho
    dt = min(1e-2, horizon / 64.0)
    traj = integrate_flow(spec, start, dt, horizon)
    x = traj.states[-1]
    x = x - np.linalg.solve(np.atleast_2d(spec.hess(x)), np.asarray(spec.grad(x)))
    if np.linalg.norm(spec.grad(x)) > 1e-10:
        raise ValueError(f"{spec.name}: failed to locate the minimizer "
                         "(coercivity violated?)")
    return x


def _grad_norms_sq(spec: PotentialSpec, traj: Trajectory) -> np.ndarray:
    return np.array([float(np.dot(spec.grad(x), spec.grad(x)))
                     for x in traj.states])


def de_bruijn_residual(spec: PotentialSpec, traj: Trajectory) -> float:
    """max_t | d/dt E(S_t) + |grad E(S_t)|^2 |, centered differences in t."""
    if len(traj.times) < 3:
        raise ValueError("need at least 3 time points")
    energies = np.array([float(spec.energy(x)) for x in traj.states])
    dt = traj.times[1] - traj.times[0]
    dedt = (energies[2:] - energies[:-2]) / (2.0 * dt)
    return float(np.max(np.abs(dedt + _grad_norms_sq(spec, traj)[1:-1])))


@dataclass(frozen=True)
class DecayCheck:
    worst_ratio: float
    degenerate: bool
    passed: bool


def production_decay_check(spec: PotentialSpec, traj: Trajectory,
                           tol: float = 1e-6) -> DecayCheck:
    """Worst ratio of |grad E(S_t)|^2 over exp(-2 rho t) |grad E(x0)|^2."""
    g2 = _grad_norms_sq(spec, traj)
    if g2[0] <= 1e-30:
        return DecayCheck(0.0, True, True)
    ratios = g2 / (np.exp(-2.0 * spec.rho * traj.times) * g2[0])
    worst = float(np.max(ratios))
    return DecayCheck(worst, False, worst <= 1.0 + tol)


def entropy_decay_check(spec: PotentialSpec, traj: Trajectory,
                        tol: float = 1e-6) -> DecayCheck:
    """Worst ratio of E(S_t) - E(beta) over exp(-2 rho t) (E(x0) - E(beta))."""
    beta = locate_minimizer(spec, x0=traj.states[-1])
    e_min = float(spec.energy(beta))
    excess = np.array([float(spec.energy(x)) for x in traj.states]) - e_min
    if excess[0] <= 1e-30:
        return DecayCheck(0.0, True, True)
    if np.any(excess < -tol * max(1.0, excess[0])):
        return DecayCheck(float("inf"), False, False)
    ratios = excess / (np.exp(-2.0 * spec.rho * traj.times) * excess[0])
    worst = float(np.max(ratios))
    return DecayCheck(worst, False, worst <= 1.0 + tol)


def eep_inequality_check(spec: PotentialSpec, x) -> tuple[float, float]:
    """Energy-production inequality sides: (E(x)-E(beta), |grad E(x)|^2/(2 rho))."""
    x = np.asarray(x, dtype=float).reshape(spec.dim)
    beta = locate_minimizer(spec, x0=x)
    lhs = float(spec.energy(x) - spec.energy(beta))
    g = np.asarray(spec.grad(x))
    rhs = float(np.dot(g, g)) / (2.0 * spec.rho)
    return lhs, rhs


def write_trajectory_csv(spec: PotentialSpec, traj: Trajectory, path) -> None:
    """Dump ``t,x_1..x_n,E,gradnorm2`` rows."""
    cols = ",".join(f"x_{i + 1}" for i in range(spec.dim))
    lines = [f"t,{cols},E,gradnorm2"]
    for t, x in zip(traj.times, traj.states):
        g = np.asarray(spec.grad(x))
        fields = [fmt_float(t), *(fmt_float(c) for c in x),
                  fmt_float(spec.energy(x)), fmt_float(float(np.dot(g, g)))]
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def quadratic_potential(dim: int = 2) -> PotentialSpec:
    """E = |x|^2/2, rho = 1, beta = 0; flow is exactly exp(-t) x."""
    return PotentialSpec(
        "quadratic", dim,
        energy=lambda x: 0.5 * float(np.dot(x, x)),
        grad=lambda x: np.asarray(x, dtype=float),
        hess=lambda x: np.eye(dim),
        rho=1.0,
        minimizer=np.zeros(dim),
    )


def quartic_potential() -> PotentialSpec:
    """E = x^2/2 + x^4/4 in 1D; Hess = 1 + 3 x^2 >= 1."""
    return PotentialSpec(
        "quartic", 1,
        energy=lambda x: 0.5 * float(x[0] ** 2) + 0.25 * float(x[0] ** 4),
        grad=lambda x: np.array([x[0] + x[0] ** 3]),
        hess=lambda x: np.array([[1.0 + 3.0 * x[0] ** 2]]),
        rho=1.0,
        minimizer=np.zeros(1),
    )


def anisotropic_quadratic_potential() -> PotentialSpec:
    """E = (2 x1^2 + 5 x2^2)/2; rho = smallest Hessian eigenvalue = 2."""
    a = np.diag([2.0, 5.0])
    return PotentialSpec(
        "anisotropic_quadratic", 2,
        energy=lambda x: 0.5 * float(x @ a @ x),
        grad=lambda x: a @ np.asarray(x, dtype=float),
        hess=lambda x: a,
        rho=2.0,
        minimizer=np.zeros(2),
    )


def builtin_potential_bank() -> list[PotentialSpec]:
    return [quadratic_potential(), quartic_potential(),
            anisotropic_quadratic_potential()]
