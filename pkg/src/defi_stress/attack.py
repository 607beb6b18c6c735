"""Governance-capture attack pricing: orderbook sweep cost, flash-loan
financing, voting gas budget, and end-to-end profitability with
revert-if-unprofitable semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    InsufficientDepth,
    InsufficientPoolLiquidity,
    InvalidParams,
)

CROWDFUND = "crowdfund"
FLASHLOAN = "flashloan"


@dataclass(frozen=True)
class OrderBookSnapshot:
    """Ask side of one venue: (price, quantity) levels ascending in price."""

    venue_id: str
    levels: tuple[tuple[float, float], ...]

    def __post_init__(self):
        prev = 0.0
        for price, qty in self.levels:
            if price <= 0:
                raise InvalidParams(f"{self.venue_id}: prices must be > 0")
            if price < prev:
                raise InvalidParams(f"{self.venue_id}: prices must be non-decreasing")
            if qty <= 0:
                raise InvalidParams(f"{self.venue_id}: quantities must be > 0")
            prev = price

    def depth(self) -> float:
        return sum(q for _, q in self.levels)


@dataclass(frozen=True)
class FlashPool:
    pool_id: str
    available: float
    fee_rate: float

    def __post_init__(self):
        if self.available < 0 or self.fee_rate < 0:
            raise InvalidParams("pool liquidity and fee must be >= 0")


@dataclass(frozen=True)
class AttackPlan:
    tokens_needed: float
    books: tuple[OrderBookSnapshot, ...]
    flash_pools: tuple[FlashPool, ...]
    seizable_collateral: float  # loan-currency units (e.g. ETH)
    mintable_debt: float  # quote currency (debt token pegged 1:1)
    governance_token_price: float  # quote/unit
    loan_currency_price: float  # quote/unit
    gas_cost: float  # quote currency

    def __post_init__(self):
        if self.tokens_needed <= 0:
            raise InvalidParams("tokens_needed must be > 0")
        if self.governance_token_price <= 0 or self.loan_currency_price <= 0:
            raise InvalidParams("prices must be > 0")


@dataclass(frozen=True)
class SweepResult:
    total_cost: float
    fills: tuple[tuple[str, float, float], ...]  # (venue, price, qty), fill order

    def venue_totals(self) -> dict[str, float]:
        totals: dict[str, float] = {}
        for venue, _, qty in self.fills:
            totals[venue] = totals.get(venue, 0.0) + qty
        return totals


@dataclass(frozen=True)
class AttackOutcome:
    strategy: str
    executed: bool
    net_profit: float
    holdings: dict[str, float]
    sweep_cost: float | None = None
    loan_interest: float | None = None


def sweep_cost(
    books: Sequence[OrderBookSnapshot], target_qty: float
) -> SweepResult:
    """Cost of buying target_qty by walking the cheapest levels across all
    venues merged into one ladder. Ties between equal prices fill in book
    order, then level order."""
    if target_qty <= 0:
        raise InvalidParams("target quantity must be > 0")
    merged = sorted(
        (
            (price, bi, li, qty, book.venue_id)
            for bi, book in enumerate(books)
            for li, (price, qty) in enumerate(book.levels)
        ),
    )
    depth = sum(level[3] for level in merged)
    if depth < target_qty:
        raise InsufficientDepth(target=target_qty, max_fillable=depth)
    remaining = target_qty
    fills = []
    cost = 0.0
    for price, _, _, qty, venue in merged:
        take = min(qty, remaining)
        fills.append((venue, price, take))
        cost += take * price
        remaining -= take
        if remaining <= 0:
            break
    return SweepResult(total_cost=cost, fills=tuple(fills))


def flash_loan_cost(
    pools: Sequence[FlashPool], amount: float
) -> tuple[dict[str, float], float]:
    """Greedy allocation from the lowest-fee pools first.

    Returns ({pool_id: allocated}, total interest). Ties between equal fees
    fill in input order."""
    if amount <= 0:
        raise InvalidParams("loan amount must be > 0")
    total_available = sum(p.available for p in pools)
    if total_available < amount:
        raise InsufficientPoolLiquidity(amount=amount, available=total_available)
    ordered = sorted(enumerate(pools), key=lambda item: (item[1].fee_rate, item[0]))
    allocation: dict[str, float] = {}
    interest = 0.0
    remaining = amount
    for _, pool in ordered:
        if remaining <= 0:
            break
        take = min(pool.available, remaining)
        if take > 0:
            allocation[pool.pool_id] = take
            interest += take * pool.fee_rate
            remaining -= take
    return allocation, interest


def voting_gas_budget(
    gas_limit: float, per_vote: float, block_fraction: float
) -> int:
    """Votes that fit in a block budget: floor(gas_limit * fraction / per_vote)."""
    if gas_limit <= 0 or per_vote <= 0:
        raise InvalidParams("gas amounts must be > 0")
    if not 0 < block_fraction <= 1:
        raise InvalidParams("block fraction must lie in (0, 1]")
    return math.floor(gas_limit * block_fraction / per_vote)


def attack_profit(plan: AttackPlan, strategy: str) -> AttackOutcome:
    """Net profit of one attack strategy at spot valuations.

    Crowdfund: participants keep their own governance tokens, so the profit
    is the seized collateral plus mintable debt minus gas. Flash loan: the
    swept token cost is repaid from the seized collateral with pool
    interest; the attacker keeps the tokens and the minted debt. The attack
    contract reverts when unprofitable, so a non-executed attack loses only
    its gas.
    """
    if strategy == CROWDFUND:
        profit = (
            plan.seizable_collateral * plan.loan_currency_price
            + plan.mintable_debt
            - plan.gas_cost
        )
        if profit <= 0:
            return AttackOutcome(strategy, False, -plan.gas_cost, {})
        holdings = {
            "loan_currency": plan.seizable_collateral,
            "debt_token": plan.mintable_debt,
        }
        return AttackOutcome(strategy, True, profit, holdings)
    if strategy == FLASHLOAN:
        sweep = sweep_cost(plan.books, plan.tokens_needed)
        _, interest = flash_loan_cost(plan.flash_pools, sweep.total_cost)
        loan_currency_left = (
            plan.seizable_collateral - sweep.total_cost - interest
        )
        profit = (
            loan_currency_left * plan.loan_currency_price
            + plan.tokens_needed * plan.governance_token_price
            + plan.mintable_debt
            - plan.gas_cost
        )
        if profit <= 0:
            return AttackOutcome(
                strategy,
                False,
                -plan.gas_cost,
                {},
                sweep_cost=sweep.total_cost,
                loan_interest=interest,
            )
        holdings = {
            "loan_currency": loan_currency_left,
            "governance_token": plan.tokens_needed,
            "debt_token": plan.mintable_debt,
        }
        return AttackOutcome(
            strategy,
            True,
            profit,
            holdings,
            sweep_cost=sweep.total_cost,
            loan_interest=interest,
        )
    raise InvalidParams(f"unknown strategy {strategy!r}")
