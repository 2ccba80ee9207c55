"""Tariff equilibrium between per-subscriber and per-traffic-category charging.

Legacy charging bills a type-``i`` subscription

    c_i = k + x_i * alpha_i * pl_tx / t_tx

while category charging bills each traffic category ``j`` separately with
resource share ``beta_j``:

    c'_ij = k' + x'_i * beta_j * alpha_i * pl_tx / t_tx

The fixed term ``k'`` is chosen so the operator's revenue is unchanged:

    sum_i N_i * c_i  ==  sum_i N'_i * (k' + sum_j x'_i * beta_j * alpha_i * pl_tx / t_tx)

which is linear in ``k'``. Category 0 is background traffic (``beta_0 = 0``),
so its price is just ``k'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import Degenerate, IndexOutOfRange, ValidationError

SUM_TOL = 1e-9


@dataclass(frozen=True)
class TariffParams:
    k: float
    x: tuple
    alpha: tuple
    pl_tx: float
    t_tx: float
    N: tuple
    N_prime: tuple
    x_prime: tuple
    beta: tuple
    #: category 0 is background traffic; only enforced with several categories
    background: bool = True

    def __post_init__(self):
        for name in ("x", "alpha", "N", "N_prime", "x_prime", "beta"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @property
    def load(self) -> float:
        """pl_tx / t_tx, the average transmission rate during high load."""
        return self.pl_tx / self.t_tx

    @property
    def n_types(self) -> int:
        return len(self.x)

    def violations(self) -> list[str]:
        out = []
        n = len(self.x)
        for name in ("alpha", "N", "N_prime", "x_prime"):
            if len(getattr(self, name)) != n:
                out.append(f"{name} must have one entry per subscription type ({n})")
        if n == 0:
            out.append("at least one subscription type is required")
        if not self.beta:
            out.append("at least one traffic category is required")
        if any(not a > 0 for a in self.alpha):
            out.append("every alpha must be > 0")
        if self.alpha and abs(math.fsum(self.alpha) - 1.0) > SUM_TOL:
            out.append("sum of alpha must equal 1")
        if any(not 0.0 <= b <= 1.0 for b in self.beta):
            out.append("every beta must be in [0, 1]")
        if self.beta and abs(math.fsum(self.beta) - 1.0) > SUM_TOL:
            out.append("sum of beta must equal 1")
        if self.background and len(self.beta) > 1 and self.beta[0] != 0.0:
            out.append("beta of the background category (index 0) must be 0")
        if not self.pl_tx > 0:
            out.append("pl_tx must be > 0")
        if not self.t_tx > 0:
            out.append("t_tx must be > 0")
        if any(v < 0 for v in self.N + self.N_prime):
            out.append("subscriber counts must be >= 0")
        if any(not math.isfinite(v) for v in (self.k,) + self.x + self.x_prime):
            out.append("costs must be finite")
        return out

    def validate(self) -> "TariffParams":
        problems = self.violations()
        if problems:
            raise ValidationError("; ".join(problems))
        return self

    @classmethod
    def from_json(cls, doc: dict) -> "TariffParams":
        required = ("k", "x", "alpha", "pl_tx", "t_tx", "N", "N_prime", "x_prime", "beta")
        if not isinstance(doc, dict):
            raise ValidationError("params must be a JSON object")
        missing = [key for key in required if key not in doc]
        if missing:
            raise ValidationError(f"missing field(s): {', '.join(missing)}")
        try:
            params = cls(
                float(doc["k"]), doc["x"], doc["alpha"], float(doc["pl_tx"]), float(doc["t_tx"]),
                doc["N"], doc["N_prime"], doc["x_prime"], doc["beta"], bool(doc.get("background", True)),
            )
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed params: {exc}") from None
        return params.validate()

    def to_json(self) -> dict:
        return {
            "k": self.k, "x": list(self.x), "alpha": list(self.alpha), "pl_tx": self.pl_tx,
            "t_tx": self.t_tx, "N": list(self.N), "N_prime": list(self.N_prime),
            "x_prime": list(self.x_prime), "beta": list(self.beta), "background": self.background,
        }


def _check(params: TariffParams, i: int, j: int | None = None) -> None:
    if not 0 <= i < params.n_types:
        raise IndexOutOfRange(f"subscription type {i} out of range [0, {params.n_types})")
    if j is not None and not 0 <= j < len(params.beta):
        raise IndexOutOfRange(f"traffic category {j} out of range [0, {len(params.beta)})")


def legacy_cost(params: TariffParams, i: int) -> float:
    _check(params, i)
    return params.k + params.x[i] * params.alpha[i] * params.load


def category_cost(params: TariffParams, k_prime: float, i: int, j: int) -> float:
    _check(params, i, j)
    return k_prime + params.x_prime[i] * params.beta[j] * params.alpha[i] * params.load


def category_total(params: TariffParams, k_prime: float, i: int) -> float:
    """Sum of :func:`category_cost` over every category (k' counted per category)."""
    _check(params, i)
    return math.fsum(category_cost(params, k_prime, i, j) for j in range(len(params.beta)))


def subscription_cost(params: TariffParams, k_prime: float, i: int) -> float:
    """Per-subscriber charge used in the revenue balance (k' counted once)."""
    _check(params, i)
    variable = math.fsum(params.x_prime[i] * b * params.alpha[i] * params.load for b in params.beta)
    return k_prime + variable


def legacy_revenue(params: TariffParams) -> float:
    return math.fsum(n * legacy_cost(params, i) for i, n in enumerate(params.N))


def category_revenue(params: TariffParams, k_prime: float) -> float:
    return math.fsum(n * subscription_cost(params, k_prime, i) for i, n in enumerate(params.N_prime))


@dataclass(frozen=True)
class DiscountCheck:
    """Background-discount conditions.

    ``per_type[i]`` is ``k' < c_i``. ``aggregate`` is the summed inequality
    obtained by putting ``c_i`` in place of ``k'`` in the revenue balance;
    it holds exactly when ``k'`` is below the ``N'``-weighted mean of ``c_i``,
    so every ``per_type`` being true implies it, but not the other way round
    when there are several subscription types.
    """

    per_type: tuple
    aggregate: bool
    aggregate_lhs: float
    aggregate_rhs: float

    @property
    def all_types(self) -> bool:
        return all(self.per_type)


@dataclass(frozen=True)
class EquilibriumResult:
    k_prime: float
    legacy_revenue: float
    category_revenue: float
    discount_holds: tuple
    aggregate_condition: bool
    closed_form_k_prime: float

    def to_json(self) -> dict:
        return {
            "k_prime": self.k_prime,
            "legacy_revenue": self.legacy_revenue,
            "category_revenue": self.category_revenue,
            "discount_holds": list(self.discount_holds),
            "aggregate_condition": self.aggregate_condition,
            "closed_form_k_prime": self.closed_form_k_prime,
        }


def solve_k_prime(params: TariffParams) -> EquilibriumResult:
    params.validate()
    n_prime = math.fsum(params.N_prime)
    if n_prime <= 0:
        raise Degenerate("k' is undefined when no subscriber transmits under category charging (N' = 0)")
    target = legacy_revenue(params)
    # the balance rearranged for k'; per-type variable terms are differenced
    # before scaling by the load so equal tariffs cancel exactly
    share = math.fsum(params.beta)
    diff = math.fsum(
        a * (n * x - n_p * x_p * share)
        for a, n, x, n_p, x_p in zip(params.alpha, params.N, params.x, params.N_prime, params.x_prime)
    )
    k_prime = (math.fsum(params.N) * params.k + diff * params.load) / n_prime
    check = discount_check(params, k_prime)
    return EquilibriumResult(
        k_prime=k_prime,
        legacy_revenue=target,
        category_revenue=category_revenue(params, k_prime),
        discount_holds=check.per_type,
        aggregate_condition=check.aggregate,
        closed_form_k_prime=k_prime_closed_form(params),
    )


def k_prime_closed_form(params: TariffParams) -> float:
    """Closed form of k', with the outer sum running over subscription types.

    k' = [N k + sum_i alpha_i (N_i x_i - sum_j N'_i x'_i beta_j) pl_tx/t_tx] / N'
    """
    n_prime = math.fsum(params.N_prime)
    if n_prime <= 0:
        raise Degenerate("N' = 0")
    n = math.fsum(params.N)
    inner = math.fsum(
        params.alpha[i] * (params.N[i] * params.x[i]
                           - math.fsum(params.N_prime[i] * params.x_prime[i] * b for b in params.beta))
        for i in range(params.n_types)
    )
    return (n * params.k + inner * params.load) / n_prime


def discount_check(params: TariffParams, k_prime: float) -> DiscountCheck:
    per_type = tuple(k_prime < legacy_cost(params, i) for i in range(params.n_types))
    n = math.fsum(params.N)
    n_prime = math.fsum(params.N_prime)
    lhs = (n - n_prime) * params.k
    rhs = params.load * (
        math.fsum(np_ * math.fsum(xp * b * a for b in params.beta)
                  for np_, xp, a in zip(params.N_prime, params.x_prime, params.alpha))
        - math.fsum((ni - np_) * xi * a for ni, np_, xi, a in zip(params.N, params.N_prime, params.x, params.alpha))
    )
    return DiscountCheck(per_type, lhs < rhs, lhs, rhs)


def sample_params(rng, n_types: int | None = None, n_categories: int | None = None) -> TariffParams:
    """Random valid parameter set (for sweeps and property checks).

    ``rng`` is a ``numpy.random.Generator``.
    """
    n_types = n_types or int(rng.integers(1, 6))
    n_categories = n_categories or int(rng.integers(1, 5))
    alpha = rng.dirichlet([1.0] * n_types)
    alpha = alpha / alpha.sum()
    if n_categories > 1:
        rest = rng.dirichlet([1.0] * (n_categories - 1))
        beta = [0.0] + list(rest / rest.sum())
    else:
        beta = [1.0]
    return TariffParams(
        k=float(rng.uniform(0.0, 100.0)),
        x=rng.uniform(0.01, 10.0, n_types),
        alpha=alpha,
        pl_tx=float(rng.uniform(1e3, 1e8)),
        t_tx=float(rng.uniform(0.1, 100.0)),
        N=rng.integers(0, 1000, n_types),
        N_prime=rng.integers(1, 1000, n_types),
        x_prime=rng.uniform(0.01, 10.0, n_types),
        beta=beta,
    ).validate()

