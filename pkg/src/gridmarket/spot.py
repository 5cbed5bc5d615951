"""Day-ahead uniform-price auction cleared by merit order.

Demand is inelastic: every bid must be matched, which in a real
exchange corresponds to bidding at the maximum allowed price. The
price cap therefore never sets the price here; an hour whose demand
cannot be covered raises :class:`InsufficientSupply` instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .domain import HOURS_PER_DAY, POWER_TOLERANCE_MW


class InsufficientSupply(Exception):
    """Total offered capacity is below total demand for an hour."""

    def __init__(self, hour: int, offered_mw: float, demanded_mw: float):
        self.hour = hour
        self.offered_mw = offered_mw
        self.demanded_mw = demanded_mw
        super().__init__(
            f"hour {hour}: offered {offered_mw:.6g} MW < demand {demanded_mw:.6g} MW"
        )


@dataclass(frozen=True)
class Offer:
    producer_id: str
    hour: int
    quantity_mw: float
    price: float

    def __post_init__(self):
        if self.quantity_mw < 0:
            raise ValueError(f"offer quantity must be >= 0, got {self.quantity_mw}")
        if self.price < 0:
            raise ValueError(f"spot offer price must be >= 0, got {self.price}")


@dataclass(frozen=True)
class Bid:
    utility_id: str
    hour: int
    quantity_mw: float

    def __post_init__(self):
        if self.quantity_mw < 0:
            raise ValueError(f"bid quantity must be >= 0, got {self.quantity_mw}")


@dataclass
class ClearingResult:
    hour: int
    price: float
    schedules: dict[str, float] = field(default_factory=dict)
    total_demand_mw: float = 0.0

    def scheduled(self, producer_id: str) -> float:
        return self.schedules.get(producer_id, 0.0)


def clear_hour(offers: list[Offer], bids: list[Bid]) -> ClearingResult:
    """Uniform-price clearing of one hour.

    Offers are accepted in ascending price order until demand is met;
    the marginal offer may be partially accepted and sets the price.
    Equal-priced offers are taken in ascending producer_id order so
    replays are deterministic (any split is welfare-equivalent).
    A zero-demand hour clears at price 0 with an empty schedule.
    """
    hours = {o.hour for o in offers} | {b.hour for b in bids}
    if len(hours) > 1:
        raise ValueError(f"offers/bids span multiple hours: {sorted(hours)}")
    hour = hours.pop() if hours else 0

    demand = sum(b.quantity_mw for b in bids)
    if demand <= 0.0:
        return ClearingResult(hour=hour, price=0.0, schedules={}, total_demand_mw=demand)

    offered = sum(o.quantity_mw for o in offers)
    if offered < demand - POWER_TOLERANCE_MW:
        raise InsufficientSupply(hour, offered, demand)

    schedules: dict[str, float] = {}
    price = 0.0
    remaining = demand
    for offer in sorted(offers, key=lambda o: (o.price, o.producer_id)):
        if remaining <= 0.0:
            break
        take = min(offer.quantity_mw, remaining)
        if take <= 0.0:
            continue
        schedules[offer.producer_id] = schedules.get(offer.producer_id, 0.0) + take
        remaining -= take
        price = offer.price
    return ClearingResult(hour=hour, price=price, schedules=schedules,
                          total_demand_mw=demand)


def clear_day(offer_book: dict[int, list[Offer]],
              bid_book: dict[int, list[Bid]]) -> list[ClearingResult]:
    """Clear all 24 hours independently (no inter-hour constraints)."""
    missing = [h for h in range(HOURS_PER_DAY) if h not in offer_book or h not in bid_book]
    if missing:
        raise ValueError(f"hours missing from the books: {missing}")
    return [clear_hour(offer_book[h], bid_book[h]) for h in range(HOURS_PER_DAY)]
