"""Fixed-point solvers for discounted Riccati and Lyapunov equations.

The Riccati solve is plain value iteration on the quadratic weight: start
at K = Q and apply the one-step update until the Frobenius change is
below a relative tolerance.  Lyapunov solves iterate the corresponding
linear recursion.  Both report iteration counts and a final residual.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InstabilityError, SolverDivergenceError
from .model import LinearPolicy, LqrSystem, check_controllability, check_observability
from .util import spectral_radius, symmetrize

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class RiccatiSolution:
    K: np.ndarray
    gain: LinearPolicy
    iterations: int
    residual: float
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class LyapunovSolution:
    S: np.ndarray
    iterations: int
    residual: float
    warnings: tuple[str, ...] = ()


def riccati_step(K, A, b, Q, r, gamma) -> np.ndarray:
    """One value-iteration update of the discounted Riccati recursion."""
    Kb = K @ b
    denom = gamma * float(b @ Kb) + r
    if denom <= 0.0:
        raise ConfigError(
            f"control curvature gamma b'Kb + r = {denom:.6e} must be positive"
        )
    inner = gamma * K - (gamma * gamma / denom) * np.outer(Kb, Kb)
    return symmetrize(Q + A.T @ inner @ A)


def optimal_gain(K, A, b, r, gamma) -> np.ndarray:
    """Minimizing feedback row for weight K: u = gain . x."""
    denom = gamma * float(b @ K @ b) + r
    return -(gamma / denom) * (b @ K @ A)


def closed_loop(A, b, gain) -> np.ndarray:
    """State transition under u = gain . x."""
    return A + np.outer(b, np.asarray(gain, dtype=float))


def solve_riccati(
    system: LqrSystem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RiccatiSolution:
    """Solve the discounted Riccati equation by value iteration from K = Q.

    Stops when ||K_next - K||_F <= tol * (1 + ||K||_F).  A structurally
    deficient system is not rejected; it is flagged in ``warnings`` and
    the iteration proceeds (it may still converge, or hit the budget).
    """
    A, b, Q, r, gamma = system.A, system.b, system.Q, system.r, system.gamma
    warnings = []
    ctrb = check_controllability(system)
    if not ctrb.controllable:
        warnings.append(
            f"system is not controllable (rank {ctrb.rank} < {system.d})"
        )
    obs = check_observability(system)
    if not obs.observable:
        warnings.append("cost does not observe every coordinate")

    K = Q.copy()
    for iteration in range(1, max_iter + 1):
        K_next = riccati_step(K, A, b, Q, r, gamma)
        delta = np.linalg.norm(K_next - K, "fro")
        bound = tol * (1.0 + np.linalg.norm(K, "fro"))
        K = K_next
        if delta <= bound:
            residual = float(
                np.linalg.norm(riccati_step(K, A, b, Q, r, gamma) - K, "fro")
            )
            gain = LinearPolicy(optimal_gain(K, A, b, r, gamma))
            return RiccatiSolution(
                K=K,
                gain=gain,
                iterations=iteration,
                residual=residual,
                warnings=tuple(warnings),
            )
    residual = float(np.linalg.norm(riccati_step(K, A, b, Q, r, gamma) - K, "fro"))
    raise SolverDivergenceError(
        f"Riccati iteration did not converge in {max_iter} iterations "
        f"(residual {residual:.6e})",
        last_iterate=K,
        residual=residual,
        iterations=max_iter,
    )


def solve_riccati_lambda(
    system: LqrSystem,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RiccatiSolution:
    """Riccati solve with the control penalty replaced by lam."""
    lam = float(lam)
    if not (lam > 0.0):
        raise ConfigError(f"lambda must be positive, got {lam}")
    return solve_riccati(system.with_r(lam), tol=tol, max_iter=max_iter)


def solve_discounted_lyapunov(
    F,
    C,
    gamma: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    w0=None,
) -> LyapunovSolution:
    """Solve W = C + gamma F'WF by fixed-point iteration.

    Requires the discounted contraction gamma * rho(F)^2 < 1; otherwise
    the series diverges and InstabilityError is raised.
    """
    F = np.asarray(F, dtype=float)
    C = symmetrize(np.asarray(C, dtype=float))
    rho = spectral_radius(F)
    contraction = gamma * rho * rho
    if contraction >= 1.0:
        raise InstabilityError(
            f"gamma * rho(F)^2 = {contraction:.6f} >= 1; discounted sum diverges"
        )
    W = np.zeros_like(C) if w0 is None else symmetrize(np.asarray(w0, dtype=float))
    for iteration in range(1, max_iter + 1):
        W_next = symmetrize(C + gamma * (F.T @ W @ F))
        delta = np.linalg.norm(W_next - W, "fro")
        bound = tol * (1.0 + np.linalg.norm(W, "fro"))
        W = W_next
        if delta <= bound:
            residual = float(
                np.linalg.norm(C + gamma * (F.T @ W @ F) - W, "fro")
            )
            return LyapunovSolution(S=W, iterations=iteration, residual=residual)
    residual = float(np.linalg.norm(C + gamma * (F.T @ W @ F) - W, "fro"))
    raise SolverDivergenceError(
        f"Lyapunov iteration did not converge in {max_iter} iterations "
        f"(residual {residual:.6e})",
        last_iterate=W,
        residual=residual,
        iterations=max_iter,
    )


def solve_state_penalizing(
    system: LqrSystem,
    policy: LinearPolicy,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> LyapunovSolution:
    """Accumulated state cost of a fixed policy: S = Q + gamma F'SF.

    A spectral radius of F at or above one is tolerated with a warning as
    long as the discounted contraction still holds.
    """
    F = closed_loop(system.A, system.b, policy.gain)
    rho = spectral_radius(F)
    warnings: tuple[str, ...] = ()
    if rho >= 1.0:
        if system.gamma * rho * rho >= 1.0:
            raise InstabilityError(
                f"closed loop has rho(F) = {rho:.6f} and "
                f"gamma rho^2 = {system.gamma * rho * rho:.6f} >= 1"
            )
        warnings = (
            f"rho(F) = {rho:.6f} >= 1; discounted sums still converge",
        )
    sol = solve_discounted_lyapunov(
        F, system.Q, system.gamma, tol=tol, max_iter=max_iter
    )
    return LyapunovSolution(
        S=sol.S, iterations=sol.iterations, residual=sol.residual, warnings=warnings
    )
