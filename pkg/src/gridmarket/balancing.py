"""In-hour regulation market.

Producers list up/down regulation capacity against their spot schedule.
Every 15-minute cycle the engine compares average consumption with
production; when the mismatch exceeds the activation threshold, offers
are called cheapest-to-activate first and the called producer is pulled
from both lists for the rest of the hour (frequent output swings are
hard on the equipment). Activations hold until the end of the hour.

Settlement follows the Nordic two-price scheme: every activated up
offer is paid the hour's single marginal up price, down offers pay the
marginal down price back, and parties whose imbalance aggravated the
hour's dominant direction settle at the regulation price while parties
that opposed it settle at spot.
"""
from __future__ import annotations

from dataclasses import dataclass

from .agents import BasicProducer
from .domain import MINUTES_PER_HOUR, hour_of_day, minute_index, day_of
from .spot import ClearingResult

UP = "up"
DOWN = "down"


@dataclass(frozen=True)
class BalancingOffer:
    producer_id: str
    direction: str
    quantity_mw: float
    price: float

    def __post_init__(self):
        if self.direction not in (UP, DOWN):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.quantity_mw < 0:
            raise ValueError("balancing quantity must be >= 0")


@dataclass(frozen=True)
class Activation:
    producer_id: str
    direction: str
    quantity_mw: float
    price: float
    start: int  # absolute minute index
    hold_until: int  # last minute of the hour containing start

    @property
    def held_minutes(self) -> int:
        return self.hold_until - self.start + 1

    @property
    def energy_mwh(self) -> float:
        return self.quantity_mw * self.held_minutes / MINUTES_PER_HOUR


@dataclass
class HourSettlement:
    hour: int
    spot_price: float
    up_price: float | None = None
    down_price: float | None = None
    dominant_direction: str | None = None


def _end_of_hour(minute: int) -> int:
    return minute_index(day_of(minute), hour_of_day(minute), MINUTES_PER_HOUR - 1)


def submit_offers(producers: list[BasicProducer], hour: int, spot: ClearingResult,
                  *, markup: float = 0.5,
                  markdown: float = 0.4) -> tuple[list[BalancingOffer], list[BalancingOffer]]:
    """Collect one up and one down offer per producer for the hour.

    Up quantity is capped by both the balancing share of capacity and
    the headroom above the spot schedule; down quantity by the share
    and the scheduled output itself. Offer prices are the marginal
    price marked up/down, clamped so that up offers never undercut the
    spot price and down offers never exceed it. The up list is sorted
    ascending by price, the down list descending, so both read
    cheapest-to-activate first.
    """
    up_list: list[BalancingOffer] = []
    down_list: list[BalancingOffer] = []
    for p in producers:
        if p.balancing_share <= 0.0:
            continue
        scheduled = spot.scheduled(p.id)
        reserve = p.balancing_share * p.capacity_mw
        up_qty = min(reserve, p.capacity_mw - scheduled)
        down_qty = min(reserve, scheduled)
        if up_qty > 0.0:
            price = max(spot.price, p.marginal_price * (1.0 + markup))
            up_list.append(BalancingOffer(p.id, UP, up_qty, price))
        if down_qty > 0.0:
            price = min(spot.price, p.marginal_price * (1.0 - markdown))
            down_list.append(BalancingOffer(p.id, DOWN, down_qty, price))
    up_list.sort(key=lambda o: (o.price, o.producer_id))
    down_list.sort(key=lambda o: (-o.price, o.producer_id))
    return up_list, down_list


def cycle_check(imbalance_mw: float, threshold_mw: float,
                up_list: list[BalancingOffer], down_list: list[BalancingOffer],
                now: int) -> tuple[list[Activation], float]:
    """Activate regulation for one cycle if the imbalance warrants it.

    `imbalance_mw` is positive when consumption exceeds production
    (up-regulation needed). Offers are taken cheapest-first until the
    cumulative activated power covers |imbalance|; the marginal offer
    may be partially activated. Called producers are removed from BOTH
    lists for the remainder of the hour. Returns the activations and
    the uncovered shortfall (nonzero when reserves ran out; recorded
    as residual imbalance, never an abort).

    Both lists are mutated in place; they are owned by the engine's
    hour loop.
    """
    if abs(imbalance_mw) <= threshold_mw:
        return [], 0.0
    source = up_list if imbalance_mw > 0 else down_list
    direction = UP if imbalance_mw > 0 else DOWN
    need = abs(imbalance_mw)
    hold_until = _end_of_hour(now)
    activations: list[Activation] = []
    called: set[str] = set()
    while need > 0.0 and source:
        offer = source.pop(0)
        qty = min(offer.quantity_mw, need)
        activations.append(
            Activation(offer.producer_id, direction, qty, offer.price, now, hold_until)
        )
        called.add(offer.producer_id)
        need -= qty
    up_list[:] = [o for o in up_list if o.producer_id not in called]
    down_list[:] = [o for o in down_list if o.producer_id not in called]
    return activations, max(need, 0.0)


def settle_hour(activations: list[Activation], spot_price: float,
                hour: int) -> HourSettlement:
    """Marginal regulation prices and dominant direction for one hour."""
    up_energy = sum(a.energy_mwh for a in activations if a.direction == UP)
    down_energy = sum(a.energy_mwh for a in activations if a.direction == DOWN)
    up_prices = [a.price for a in activations if a.direction == UP]
    down_prices = [a.price for a in activations if a.direction == DOWN]
    if up_energy > 0.0 or down_energy > 0.0:
        # tie resolves to up
        dominant = UP if up_energy >= down_energy else DOWN
    else:
        dominant = None
    return HourSettlement(
        hour=hour,
        spot_price=spot_price,
        up_price=max(up_prices) if up_prices else None,
        down_price=min(down_prices) if down_prices else None,
        dominant_direction=dominant,
    )


def charge_imbalances(settlement: HourSettlement,
                      party_imbalances_mwh: dict[str, float]) -> dict[str, float]:
    """Two-price imbalance settlement for one hour.

    Imbalances are deviations from schedule in MWh, positive when a
    party consumed more (or produced less) than scheduled. A positive
    charge is money owed to the market. Imbalances that aggravate the
    dominant direction settle at the regulation price; opposing ones
    settle at spot, as do all imbalances in hours without regulation.
    """
    spot = settlement.spot_price
    charges: dict[str, float] = {}
    for party, imb in party_imbalances_mwh.items():
        if imb == 0.0:
            charges[party] = 0.0
            continue
        price = spot
        if settlement.dominant_direction == UP and imb > 0.0 and settlement.up_price is not None:
            price = settlement.up_price
        elif settlement.dominant_direction == DOWN and imb < 0.0 and settlement.down_price is not None:
            price = settlement.down_price
        charges[party] = imb * price
    return charges
