"""Core system types, market assembly, and structural checks.

Everything downstream works with :class:`LqrSystem`: linear dynamics
x' = A x + b u + n, quadratic per-step cost x'Qx + r u^2, and a discount
factor gamma in (0, 1).  Instances are immutable; derived systems are
built with :meth:`LqrSystem.with_r` or :func:`dataclasses.replace`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .util import symmetrize

# Smallest eigenvalue tolerated before a covariance/weight matrix is
# rejected; anything in [-EIG_FLOOR, 0) is clipped to zero.
EIG_FLOOR = 1e-10
# Relative singular-value threshold for rank decisions.
RANK_RTOL = 1e-12

NOISE_FAMILIES = ("gaussian", "none")


def _as_square(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"{name} must be a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ConfigError(f"{name} contains non-finite entries")
    return M


def _as_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ConfigError(f"{name} contains non-finite entries")
    return v


def clean_spsd(M, name: str) -> np.ndarray:
    """Symmetrize and validate a positive-semidefinite matrix.

    Eigenvalues in [-EIG_FLOOR, 0) are treated as roundoff and clipped to
    zero; anything more negative is rejected with the offending value in
    the message.
    """
    S = symmetrize(_as_square(M, name))
    if S.shape[0] == 0:
        raise ConfigError(f"{name} must have at least one row")
    w, V = np.linalg.eigh(S)
    lo = float(w.min())
    if lo < -EIG_FLOOR:
        raise ConfigError(
            f"{name} is not positive semidefinite: min eigenvalue {lo:.6e}"
        )
    if lo < 0.0:
        S = symmetrize((V * np.clip(w, 0.0, None)) @ V.T)
    return S


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NoiseSpec:
    """Additive process-noise description: a covariance and a family tag."""

    covariance: np.ndarray
    family: str = "gaussian"

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ConfigError(
                f"noise family must be one of {NOISE_FAMILIES}, got {self.family!r}"
            )
        cov = clean_spsd(self.covariance, "noise covariance")
        if self.family == "none" and np.any(cov != 0.0):
            raise ConfigError("noise family 'none' requires a zero covariance")
        object.__setattr__(self, "covariance", _freeze(cov))

    @classmethod
    def none(cls, d: int) -> "NoiseSpec":
        return cls(covariance=np.zeros((d, d)), family="none")

    @classmethod
    def diagonal(cls, values, family: str = "gaussian") -> "NoiseSpec":
        v = _as_vector(values, "noise diagonal")
        return cls(covariance=np.diag(v), family=family)

    @property
    def d(self) -> int:
        return self.covariance.shape[0]

    def is_zero(self) -> bool:
        return not np.any(self.covariance)


@dataclass(frozen=True)
class LqrSystem:
    """Scalar-input linear system with quadratic cost and discounting."""

    A: np.ndarray
    b: np.ndarray
    noise: NoiseSpec
    Q: np.ndarray
    r: float
    gamma: float

    def __post_init__(self):
        A = _as_square(self.A, "A")
        b = _as_vector(self.b, "b")
        d = A.shape[0]
        if b.shape[0] != d:
            raise ConfigError(f"b has length {b.shape[0]}, expected {d}")
        Q = clean_spsd(self.Q, "Q")
        if Q.shape[0] != d:
            raise ConfigError(f"Q has shape {Q.shape}, expected ({d}, {d})")
        if self.noise.d != d:
            raise ConfigError(
                f"noise covariance has dimension {self.noise.d}, expected {d}"
            )
        r = float(self.r)
        if not (r > 0.0):
            raise ConfigError(f"control penalty r must be positive, got {r}")
        gamma = float(self.gamma)
        if not (0.0 < gamma < 1.0):
            raise ConfigError(f"discount gamma must lie in (0, 1), got {gamma}")
        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "b", _freeze(b))
        object.__setattr__(self, "Q", _freeze(Q))
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "gamma", gamma)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def with_r(self, r: float) -> "LqrSystem":
        return replace(self, r=r)


@dataclass(frozen=True)
class LinearPolicy:
    """Stationary feedback u = gain . x with a row gain vector."""

    gain: np.ndarray

    def __post_init__(self):
        g = _as_vector(self.gain, "gain")
        object.__setattr__(self, "gain", _freeze(g))

    @property
    def d(self) -> int:
        return self.gain.shape[0]

    def __call__(self, x) -> float:
        return float(self.gain @ np.asarray(x, dtype=float))


@dataclass(frozen=True)
class MixturePolicy:
    """Randomize once at t = 0: play ``first`` with probability ``weight``.

    After the single draw the chosen linear policy is followed forever, so
    every discounted functional of the mixture is the convex combination
    of the component values.
    """

    first: LinearPolicy
    second: LinearPolicy
    weight: float

    def __post_init__(self):
        w = float(self.weight)
        if not (0.0 <= w <= 1.0):
            raise ConfigError(f"mixture weight must lie in [0, 1], got {w}")
        if self.first.d != self.second.d:
            raise ConfigError(
                f"mixture components act on different dimensions: "
                f"{self.first.d} vs {self.second.d}"
            )
        object.__setattr__(self, "weight", w)

    @property
    def d(self) -> int:
        return self.first.d


@dataclass(frozen=True)
class MarketInstance:
    """An LqrSystem plus coordinate labels and the scalars that built it."""

    system: LqrSystem
    labels: tuple[str, ...]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.labels) != self.system.d:
            raise ConfigError(
                f"{len(self.labels)} labels for a {self.system.d}-dimensional system"
            )


def build_price_taking_market(
    beta, sigma, phi1, phi2, noise: NoiseSpec, Q, r, gamma
) -> MarketInstance:
    """Assemble the three-coordinate market model (demand, supply, price).

    Demand decays at rate beta and falls with price through phi1; supply
    decays at sigma and rises with price through phi2; price integrates
    the control.  All four structural rates must be nonnegative.
    """
    rates = {"beta": beta, "sigma": sigma, "phi1": phi1, "phi2": phi2}
    for name, value in rates.items():
        value = float(value)
        if not (value >= 0.0) or not np.isfinite(value):
            raise ConfigError(f"{name} must be a nonnegative real, got {value}")
        rates[name] = value
    A = np.array(
        [
            [rates["beta"], 0.0, -rates["phi1"]],
            [0.0, rates["sigma"], rates["phi2"]],
            [0.0, 0.0, 1.0],
        ]
    )
    b = np.array([0.0, 0.0, 1.0])
    system = LqrSystem(A=A, b=b, noise=noise, Q=Q, r=r, gamma=gamma)
    return MarketInstance(
        system=system, labels=("demand", "supply", "price"), params=dict(rates)
    )


@dataclass(frozen=True)
class ControllabilityReport:
    rank: int
    controllable: bool
    matrix: np.ndarray


@dataclass(frozen=True)
class ObservabilityReport:
    observable: bool
    min_eigenvalue_q: float
    rank: int | None = None


def _matrix_rank(M: np.ndarray) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > max(M.shape) * s[0] * RANK_RTOL))


def check_controllability(system: LqrSystem) -> ControllabilityReport:
    """Rank of [b, Ab, ..., A^(d-1) b] with an SVD-based threshold."""
    d = system.d
    cols = [system.b]
    for _ in range(d - 1):
        cols.append(system.A @ cols[-1])
    C = np.column_stack(cols)
    rank = _matrix_rank(C)
    return ControllabilityReport(rank=rank, controllable=rank == d, matrix=C)


def check_observability(system: LqrSystem) -> ObservabilityReport:
    """Observability of the cost: shortcut on min eig(Q), else a rank test.

    A positive-definite Q observes every coordinate directly.  Otherwise
    factor Q = C'C and test the rank of the observability matrix of (A, C).
    """
    w, V = np.linalg.eigh(system.Q)
    lo = float(w.min())
    if lo > EIG_FLOOR:
        return ObservabilityReport(observable=True, min_eigenvalue_q=lo)
    C = np.sqrt(np.clip(w, 0.0, None))[:, None] * V.T
    blocks = [C]
    for _ in range(system.d - 1):
        blocks.append(blocks[-1] @ system.A)
    rank = _matrix_rank(np.vstack(blocks))
    return ObservabilityReport(
        observable=rank == system.d, min_eigenvalue_q=lo, rank=rank
    )


def noise_from_config(section) -> NoiseSpec:
    """Build a NoiseSpec from a config mapping.

    ``covariance`` may be a flat list (diagonal) or nested rows (full
    matrix); ``family`` defaults to gaussian.
    """
    if not isinstance(section, dict):
        raise ConfigError("noise section must be a mapping")
    family = section.get("family", "gaussian")
    if "covariance" not in section:
        raise ConfigError("noise section requires a covariance entry")
    cov = section["covariance"]
    arr = np.asarray(cov, dtype=float)
    if arr.ndim == 1:
        return NoiseSpec.diagonal(arr, family=family)
    return NoiseSpec(covariance=arr, family=family)


def system_from_config(section) -> LqrSystem:
    """Build an LqrSystem from a scenario ``system`` mapping.

    Two forms are accepted: the market form with scalars beta/sigma/phi1/
    phi2, or an explicit form with full A and b.  Both need Q, noise, r,
    and gamma.
    """
    if not isinstance(section, dict):
        raise ConfigError("system section must be a mapping")
    missing = [k for k in ("Q", "noise", "r", "gamma") if k not in section]
    if missing:
        raise ConfigError(f"system section missing keys: {', '.join(missing)}")
    noise = noise_from_config(section["noise"])
    market_keys = {"beta", "sigma", "phi1", "phi2"}
    if market_keys <= set(section):
        market = build_price_taking_market(
            beta=section["beta"],
            sigma=section["sigma"],
            phi1=section["phi1"],
            phi2=section["phi2"],
            noise=noise,
            Q=section["Q"],
            r=section["r"],
            gamma=section["gamma"],
        )
        return market.system
    if "A" in section:
        if "b" not in section:
            raise ConfigError("explicit system form requires b alongside A")
        return LqrSystem(
            A=np.asarray(section["A"], dtype=float),
            b=np.asarray(section["b"], dtype=float),
            noise=noise,
            Q=section["Q"],
            r=section["r"],
            gamma=section["gamma"],
        )
    raise ConfigError(
        "system section must supply either beta/sigma/phi1/phi2 or explicit A and b"
    )
