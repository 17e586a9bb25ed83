"""Loss bounds for the universal scheme and a grid check of the key inequalities."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import rel_entr

from .decision import LossSpec, Predictor, rescale_loss
from .evaluate import DEFAULT_EXACT_CAP, EvalReport, evaluate
from .exceptions import InvalidRange
from .measures import Measure
from .mixture import ModelClass

__all__ = [
    "SLACK_TOL",
    "BoundReport",
    "InequalityGridSpec",
    "InequalityResult",
    "unit_loss_bound",
    "general_loss_bound",
    "check_bounds",
    "bound_rows",
    "verify_proof_inequalities",
    "inequality_low_z",
    "inequality_high_z",
]

SLACK_TOL = 1e-9


def _nonneg(name, value, tol=1e-12):
    if value < -tol:
        raise InvalidRange(f"{name} must be nonnegative, got {value}")
    return max(0.0, float(value))


def unit_loss_bound(L_mu: float, H: float) -> float:
    """Excess-loss bound ``H + sqrt(4 L_mu H + H^2)`` for losses in [0, 1]."""
    L_mu, H = _nonneg("L_mu", L_mu), _nonneg("H", H)
    return H + math.sqrt(4.0 * L_mu * H + H * H)


def general_loss_bound(L_mu: float, H: float, n: int, l_min: float, l_delta: float) -> float:
    """Excess-loss bound for losses in ``[l_min, l_min + l_delta]``."""
    l_delta, H = _nonneg("l_delta", l_delta), _nonneg("H", H)
    excess = L_mu - n * l_min
    if excess < -1e-12 * max(1.0, abs(n * l_min)):
        raise InvalidRange(f"L_mu={L_mu} lies below n*l_min={n * l_min}")
    excess = max(0.0, excess)
    return l_delta * H + math.sqrt(4.0 * excess * l_delta * H + (l_delta * H) ** 2)


@dataclass(frozen=True)
class BoundReport:
    name: str
    n: int
    bound: float
    measured: float

    @property
    def slack(self) -> float:
        return self.bound - self.measured

    @property
    def lower_ok(self) -> bool:
        """The informed scheme is no worse: ``measured >= 0``."""
        return self.measured >= -SLACK_TOL

    @property
    def passed(self) -> bool:
        return self.slack >= -SLACK_TOL and self.lower_ok


def _schemes(mu, model_class, loss):
    schemes = {"xi": Predictor(model_class, loss), "mu": Predictor(mu, loss)}
    if loss.l_delta > 0:
        unit = rescale_loss(loss)
        schemes["xi_unit"] = Predictor(model_class, unit)
        schemes["mu_unit"] = Predictor(mu, unit)
    return schemes


def _reports_at(rep: EvalReport, loss: LossSpec, n: int):
    L_xi, L_mu = rep.L("xi", n), rep.L("mu", n)
    H = float(rep.H[n - 1])
    general = BoundReport(
        "general", n, general_loss_bound(L_mu, H, n, loss.l_min, loss.l_delta), L_xi - L_mu
    )
    if "xi_unit" in rep.step_losses:
        u_xi, u_mu = rep.L("xi_unit", n), rep.L("mu_unit", n)
        unit = BoundReport("unit", n, unit_loss_bound(u_mu, H), u_xi - u_mu)
    else:
        unit = BoundReport("unit", n, 0.0, 0.0)
    return unit, general, (L_xi, L_mu, H)


def check_bounds(
    mu: Measure,
    model_class: ModelClass,
    loss: LossSpec,
    n: int,
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> tuple[BoundReport, BoundReport]:
    """Exact unit-range and general-range bound reports at horizon ``n``."""
    rep = evaluate(mu, n, model_class, _schemes(mu, model_class, loss), exact_cap)
    unit, general, _ = _reports_at(rep, loss, n)
    return unit, general


def bound_rows(env_id, mu, model_class, loss, n, exact_cap=DEFAULT_EXACT_CAP):
    """CSV rows for every horizon ``1..n`` from a single enumeration.

    Columns: env_id, n, L_xi, L_mu, H_n, unit_bound, general_bound,
    slack_unit, slack_general, pass. ``unit_bound`` and ``slack_unit`` are
    in rescaled [0, 1] loss units.
    """
    rep = evaluate(mu, n, model_class, _schemes(mu, model_class, loss), exact_cap)
    for k in range(1, n + 1):
        unit, general, (L_xi, L_mu, H) = _reports_at(rep, loss, k)
        yield (
            env_id, k, L_xi, L_mu, H, unit.bound, general.bound,
            unit.slack, general.slack, unit.passed and general.passed,
        )


@dataclass(frozen=True)
class InequalityGridSpec:
    A_values: tuple = (0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
    resolution: int = 2000
    tolerance: float = 1e-9
    z_eps: float = 1e-6

    def __post_init__(self):
        if any(not a > 0 for a in self.A_values):
            raise ValueError("A values must be positive")
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")

    @staticmethod
    def B_of(A: float) -> float:
        return A / 4.0 + 1.0 / A


@dataclass(frozen=True)
class InequalityResult:
    A: float
    B: float
    min_low_z: float
    min_high_z: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return min(self.min_low_z, self.min_high_z) >= -self.tolerance


def _kl(y, z):
    return rel_entr(y, z) + rel_entr(1.0 - y, 1.0 - z)


def inequality_low_z(y, z, A):
    """``B'·KL(y, z) + A'(1-y) z/(1-z) - y``, the case ``z <= 1/2``."""
    Ap, Bp = A + 1.0, InequalityGridSpec.B_of(A) + 1.0
    return Bp * _kl(y, z) + Ap * (1.0 - y) * z / (1.0 - z) - y


def inequality_high_z(y, z, A):
    """``B'·KL(y, z) + A'(1-y) - y(1-z)/z``, the case ``z >= 1/2``."""
    Ap, Bp = A + 1.0, InequalityGridSpec.B_of(A) + 1.0
    return Bp * _kl(y, z) + Ap * (1.0 - y) - y * (1.0 - z) / z


def _grid_minima(A, spec):
    y = np.linspace(0.0, 1.0, spec.resolution)[:, None]
    z_low = np.linspace(spec.z_eps, 0.5, spec.resolution)[None, :]
    z_high = np.linspace(0.5, 1.0 - spec.z_eps, spec.resolution)[None, :]
    return InequalityResult(
        A=A,
        B=spec.B_of(A),
        min_low_z=float(inequality_low_z(y, z_low, A).min()),
        min_high_z=float(inequality_high_z(y, z_high, A).min()),
        tolerance=spec.tolerance,
    )


def verify_proof_inequalities(spec: Optional[InequalityGridSpec] = None, threads: int = 1):
    """Grid minima of both inequalities for each configured ``A``."""
    spec = spec or InequalityGridSpec()
    if threads == 1:
        return [_grid_minima(A, spec) for A in spec.A_values]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(lambda A: _grid_minima(A, spec), spec.A_values))
