"""Network entities, backhaul chain formation and per-user rate evaluation.

The backhaul is a single relay chain grown outward from the ground BS. A
user is served either directly by the BS or through the chain tail; its
effective rate is the better of the two, where the chain route is only as
fast as its weakest hop.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .channel import (
    LINK_BACKHAUL,
    LINK_DIRECT,
    LINK_FRONTHAUL,
    Position,
    RadioParams,
    atg_path_loss_db,
    elevation_angle,
    fspl_db,
    shannon_rate_bps,
    snr_linear,
)


@dataclass(frozen=True)
class GroundStation:
    pos: Position


@dataclass(frozen=True)
class Uav:
    id: int
    pos: Position
    alive: bool = True


@dataclass(frozen=True)
class UserTerminal:
    id: int
    pos: Position


class Association(enum.Enum):
    DIRECT = "direct"
    VIA_UAV = "via_uav"


@dataclass(frozen=True)
class BackhaulChain:
    """Ordered UAV ids from the BS side outward; may omit unreachable UAVs."""

    order: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.order)

    def __bool__(self) -> bool:
        return bool(self.order)


@dataclass
class EvalCounter:
    """Tallies of link evaluations, used for complexity measurements."""

    backhaul_snr_evals: int = 0
    association_evals: int = 0


@dataclass(frozen=True)
class NetworkSnapshot:
    bs: GroundStation
    uavs: tuple[Uav, ...]
    users: tuple[UserTerminal, ...]
    association: tuple[Association, ...]
    chain: BackhaulChain
    user_rates_bps: tuple[float, ...]
    user_snrs: tuple[float, ...]  # end-to-end SNR per user, for coverage
    chain_rates_bps: tuple[float, ...] = field(default=())


def _floored_distance(a: Position, b: Position, params: RadioParams) -> float:
    return max(a.distance_to(b), params.min_distance_m)


def a2a_snr(a: Position, b: Position, params: RadioParams) -> float:
    """Backhaul (air-to-air / BS-to-UAV) link SNR at the floored distance."""
    d = _floored_distance(a, b, params)
    return snr_linear(params.tx_power_mw[LINK_BACKHAUL], fspl_db(d, params), params.noise_mw)


def a2a_rate_bps(a: Position, b: Position, params: RadioParams) -> float:
    return shannon_rate_bps(params.bw_bs_hz, a2a_snr(a, b, params))


def ground_link_snr(tx_pos: Position, user_pos: Position, params: RadioParams,
                    link_class: int) -> float:
    """SNR of a BS-to-user or UAV-to-user link (air-to-ground model)."""
    d = _floored_distance(tx_pos, user_pos, params)
    pl = atg_path_loss_db(d, elevation_angle(tx_pos, user_pos), params)
    return snr_linear(params.tx_power_mw[link_class], pl, params.noise_mw)


def form_backhaul(bs: GroundStation, uavs: list[Uav], params: RadioParams,
                  counter: EvalCounter | None = None) -> BackhaulChain:
    """Grow the relay chain from the BS over the alive UAVs.

    Candidates are scanned in id order, BFS-queue style, in repeated passes.
    A candidate extends the chain when its link to the current tail is within
    range and above the SNR threshold, and either beats the candidate's own
    direct-to-BS SNR or the candidate could reach the BS on its own (in which
    case it always attaches). The first link of the chain is the BS link
    itself. UAVs that can never attach are left out.
    """
    t1 = params.snr_threshold
    r = params.comm_range_m
    pending = [u for u in uavs if u.alive]
    order: list[int] = []
    tail: Position = bs.pos

    attached_any = True
    while pending and attached_any:
        attached_any = False
        remaining: list[Uav] = []
        for cand in pending:
            if cand.pos.distance_to(bs.pos) > r and cand.pos.distance_to(tail) > r:
                remaining.append(cand)
                continue
            snr_bs = a2a_snr(bs.pos, cand.pos, params)
            if counter is not None:
                counter.backhaul_snr_evals += 1
            if not order:
                feasible = snr_bs > t1 and cand.pos.distance_to(bs.pos) <= r
            else:
                snr_tail = a2a_snr(tail, cand.pos, params)
                if counter is not None:
                    counter.backhaul_snr_evals += 1
                feasible = (snr_tail > t1
                            and cand.pos.distance_to(tail) <= r
                            and (snr_tail > snr_bs or snr_bs > t1))
            if feasible:
                order.append(cand.id)
                tail = cand.pos
                attached_any = True
            else:
                remaining.append(cand)
        pending = remaining
    return BackhaulChain(tuple(order))


def associate_user(snr_fronthaul: float, snr_chain_min: float, snr_direct: float) -> Association:
    """Serve via the UAV network only when its weakest hop strictly beats direct."""
    if min(snr_fronthaul, snr_chain_min) > snr_direct:
        return Association.VIA_UAV
    return Association.DIRECT


def effective_rate(chain_rates_bps: list[float], fronthaul_rate_bps: float | None,
                   direct_rate_bps: float) -> float:
    """Eq.-of-record end-to-end rate: max(min(chain + fronthaul), direct).

    fronthaul_rate_bps is None when no UAV serves the user, in which case
    only the direct route exists.
    """
    if fronthaul_rate_bps is None:
        return direct_rate_bps
    via = min(list(chain_rates_bps) + [fronthaul_rate_bps])
    return max(via, direct_rate_bps)


def evaluate_network(bs: GroundStation, uavs: list[Uav], users: list[UserTerminal],
                     params: RadioParams,
                     counter: EvalCounter | None = None) -> NetworkSnapshot:
    """Form the chain, compute all link SNRs/rates and per-user effective rates.

    Deterministic in its inputs. The serving UAV is always the chain tail;
    a user out of the tail's communication range gets a zero fronthaul link.
    """
    if not users:
        raise ValueError("at least one user is required")
    alive = [u for u in uavs if u.alive]
    chain = form_backhaul(bs, alive, params, counter)
    pos_by_id = {u.id: u.pos for u in alive}

    chain_snrs: list[float] = []
    chain_rates: list[float] = []
    if chain:
        hop_from = bs.pos
        for uid in chain.order:
            s = a2a_snr(hop_from, pos_by_id[uid], params)
            chain_snrs.append(s)
            chain_rates.append(shannon_rate_bps(params.bw_bs_hz, s))
            hop_from = pos_by_id[uid]
        tail_pos = pos_by_id[chain.order[-1]]

    association: list[Association] = []
    rates: list[float] = []
    snrs: list[float] = []
    for user in users:
        snr_direct = ground_link_snr(bs.pos, user.pos, params, LINK_DIRECT)
        direct_rate = shannon_rate_bps(params.bw_bs_hz, snr_direct)
        if not chain:
            association.append(Association.DIRECT)
            rates.append(direct_rate)
            snrs.append(snr_direct)
            if counter is not None:
                counter.association_evals += 1
            continue
        if user.pos.distance_to(tail_pos) <= params.comm_range_m:
            snr_front = ground_link_snr(tail_pos, user.pos, params, LINK_FRONTHAUL)
            front_rate = shannon_rate_bps(params.bw_access_hz, snr_front)
        else:
            snr_front = 0.0
            front_rate = 0.0
        if counter is not None:
            counter.association_evals += 2 + len(chain_snrs)
        association.append(associate_user(snr_front, min(chain_snrs), snr_direct))
        rates.append(effective_rate(chain_rates, front_rate, direct_rate))
        snrs.append(max(min(chain_snrs + [snr_front]), snr_direct))

    return NetworkSnapshot(
        bs=bs,
        uavs=tuple(uavs),
        users=tuple(users),
        association=tuple(association),
        chain=chain,
        user_rates_bps=tuple(rates),
        user_snrs=tuple(snrs),
        chain_rates_bps=tuple(chain_rates),
    )


def coverage_ratio(snapshot: NetworkSnapshot, params: RadioParams) -> float:
    """Fraction of users whose end-to-end SNR meets the threshold."""
    if not snapshot.users:
        raise ValueError("snapshot has no users")
    covered = sum(1 for s in snapshot.user_snrs if s >= params.snr_threshold)
    return covered / len(snapshot.users)
