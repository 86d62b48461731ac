"""Contract state machines: plain hashed timelocks and the mutable swap pair.

Every transition is a pure function (state, caller, now, args) -> (state', payout).
A failing guard raises Rejected and leaves the caller's copy of the state untouched,
so an auto-revert embedded in a failing call is rolled back with it.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass, replace
from typing import Callable

from .core import AssetAmount, Hashlock, Secret, SignedMutation, verify

CONTEST_WINDOW = 2
CANDIDATE_REPLACE_LIMIT = 4
FOLLOWER_REPLACE_LIMIT = 6
LEADER_REVERT_AFTER = 6
NEXT_TICKET_AFTER = 4
FOLLOWER_REPLACE_WINDOW = 2
# Mutation deadlines, expressed against the last reveal round of the swap.
LEADER_MUTATE_MARGIN = 7
FOLLOWER_MUTATE_MARGIN = 6
# Follower-position mutations must leave this many rounds before the swap ends.
FOLLOWER_POSITION_MARGIN = 2
MIN_DT = 4

STATE_NAMES = ("Ready2Claim", "MutateLockContestable", "MutateLockNonContestable", "Claimed", "Refunded")


class Rejected(Exception):
    @property
    def reason(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class Payout:
    to: str
    asset: AssetAmount


@dataclass(frozen=True)
class Rules:
    """Build-level switches. The non-default values exist only for negative controls."""

    contest_enabled: bool = True
    contest_window: int = CONTEST_WINDOW
    multi_candidate: bool = False


@dataclass(frozen=True)
class HtlcContract:
    asset: AssetAmount
    sender: str
    receiver: str
    swap_hashlock: Hashlock
    timeout: int
    created: int
    status: str = "active"


@dataclass(frozen=True)
class LeaderMutation:
    voucher: SignedMutation | None = None
    candidate: str | None = None
    mutator: str | None = None
    replace_hashlock: Hashlock | None = None
    new_swap_hashlock: Hashlock | None = None
    start_time: int = 0
    approved: bool = False
    mutating: bool = False
    locks_asset: bool = True
    seq: int | None = None


@dataclass(frozen=True)
class FollowerMutation:
    voucher: SignedMutation | None = None
    candidate: str | None = None
    replace_hashlock: Hashlock | None = None
    start_time: int = 0
    mutating: bool = False
    locks_asset: bool = True
    seq: int | None = None


@dataclass(frozen=True)
class MutSwapContract:
    asset: AssetAmount
    sender: str
    receiver: str
    leader: str
    follower: str
    swap_hashlock: Hashlock
    timeout: int
    leader_mutation: LeaderMutation
    follower_mutation: FollowerMutation
    counter: int = 0
    follower_counter: int = 0
    # The next ticket (seq == counter + 1) waiting behind the current mutation.
    queued_mutation: LeaderMutation | None = None
    status: str = "active"
    leader_escrow: bool = True
    rules: Rules = Rules()

    @property
    def last_reveal_round(self) -> int:
        """The round by which the leader must reveal on the follower-escrow side."""
        return self.timeout - 1 if self.leader_escrow else self.timeout


Contract = HtlcContract | MutSwapContract


def deploy_htlc(sender: str, receiver: str, asset: AssetAmount, swap_hashlock: Hashlock, timeout: int, now: int) -> HtlcContract:
    if sender == receiver:
        raise Rejected("sender equals receiver")
    return HtlcContract(asset, sender, receiver, swap_hashlock, timeout, now)


def deploy_mut_swap(sender: str, receiver: str, leader: str, follower: str, asset: AssetAmount,
                    start: int, dT: int, swap_hashlock: Hashlock, rules: Rules = Rules()) -> MutSwapContract:
    if dT < MIN_DT:
        raise Rejected("dT below minimum")
    if leader == follower:
        raise Rejected("leader equals follower")
    if (sender, receiver) == (leader, follower):
        leader_escrow, timeout = True, start + dT + 1
    elif (sender, receiver) == (follower, leader):
        leader_escrow, timeout = False, start + dT
    else:
        raise Rejected("role mismatch")
    return MutSwapContract(
        asset=asset, sender=sender, receiver=receiver, leader=leader, follower=follower,
        swap_hashlock=swap_hashlock, timeout=timeout,
        leader_mutation=LeaderMutation(locks_asset=True),
        follower_mutation=FollowerMutation(locks_asset=leader_escrow),
        leader_escrow=leader_escrow, rules=rules,
    )


# -- derived views -----------------------------------------------------------

def contestable(c: MutSwapContract, m: LeaderMutation, now: int) -> bool:
    return (m.mutating and not m.approved and m.mutator == c.leader
            and 0 < now - m.start_time <= c.rules.contest_window)


def state_name(c: Contract, now: int) -> str:
    if c.status == "claimed":
        return "Claimed"
    if c.status == "refunded":
        return "Refunded"
    if isinstance(c, HtlcContract) or not c.leader_mutation.mutating:
        return "Ready2Claim"
    m = c.leader_mutation
    if m.mutator == c.follower or m.approved or now - m.start_time > c.rules.contest_window:
        return "MutateLockNonContestable"
    return "MutateLockContestable"


STATE_EDGES = frozenset({
    ("Ready2Claim", "MutateLockContestable"),
    ("Ready2Claim", "MutateLockNonContestable"),
    ("MutateLockContestable", "Ready2Claim"),
    ("MutateLockContestable", "MutateLockNonContestable"),
    ("MutateLockNonContestable", "Ready2Claim"),
    ("Ready2Claim", "Claimed"),
    ("Ready2Claim", "Refunded"),
    ("MutateLockNonContestable", "Claimed"),
    ("MutateLockNonContestable", "Refunded"),
})


def transition_allowed(before: str, after: str) -> bool:
    return before == after or (before, after) in STATE_EDGES


def leader_locked(c: MutSwapContract, now: int) -> bool:
    """True when a claim or refund executed at `now` would hit an unexpired leader lock."""
    m = c.leader_mutation
    return m.mutating and now - m.start_time <= LEADER_REVERT_AFTER


def follower_locked(c: MutSwapContract, now: int) -> bool:
    m = c.follower_mutation
    return m.locks_asset and m.mutating and now - m.start_time <= FOLLOWER_REPLACE_WINDOW


# -- shared guards ------------------------------------------------------------

def _active(c: Contract) -> None:
    if c.status != "active":
        raise Rejected("terminal")


def _drop_current(c: MutSwapContract) -> MutSwapContract:
    """Clear the current leader mutation and promote the queued ticket, if any."""
    counter = c.counter + 1 if c.rules.multi_candidate else c.counter
    nxt = c.queued_mutation or LeaderMutation()
    return replace(c, leader_mutation=nxt, queued_mutation=None, counter=counter)


def _expire_leader(c: MutSwapContract, now: int) -> MutSwapContract:
    while c.leader_mutation.mutating and now - c.leader_mutation.start_time > LEADER_REVERT_AFTER:
        c = _drop_current(c)
    return c


def _expire_follower(c: MutSwapContract, now: int) -> MutSwapContract:
    m = c.follower_mutation
    if m.mutating and now - m.start_time > FOLLOWER_REPLACE_WINDOW:
        counter = c.follower_counter + 1 if c.rules.multi_candidate else c.follower_counter
        c = replace(c, follower_mutation=FollowerMutation(locks_asset=m.locks_asset), follower_counter=counter)
    return c


def _unlock_for(c: MutSwapContract, now: int, follower_too: bool) -> MutSwapContract:
    c = _expire_leader(c, now)
    if c.leader_mutation.mutating:
        raise Rejected("asset locked")
    if follower_too:
        c = _expire_follower(c, now)
        if c.follower_mutation.mutating:
            raise Rejected("asset locked")
    return c


def _target(c: MutSwapContract, seq: int | None) -> tuple[LeaderMutation, bool]:
    """The leader mutation addressed by seq; True means it is the current one."""
    if not c.rules.multi_candidate or seq is None or seq == c.leader_mutation.seq:
        return c.leader_mutation, True
    if c.queued_mutation is not None and seq == c.queued_mutation.seq:
        return c.queued_mutation, False
    raise Rejected("wrong seq")


# -- plain timelock -------------------------------------------------------------

def htlc_claim(c: HtlcContract, caller: str, now: int, secret: Secret | None = None):
    _active(c)
    if caller != c.receiver:
        raise Rejected("not receiver")
    if now > c.timeout:
        raise Rejected("expired")
    if not verify(c.swap_hashlock, secret):
        raise Rejected("wrong preimage")
    return replace(c, status="claimed"), Payout(c.receiver, c.asset)


def htlc_refund(c: HtlcContract, caller: str, now: int):
    _active(c)
    if caller != c.sender:
        raise Rejected("not sender")
    if now <= c.timeout:
        raise Rejected("not expired")
    return replace(c, status="refunded"), Payout(c.sender, c.asset)


# -- mutable swap ---------------------------------------------------------------

def claim(c: MutSwapContract, caller: str, now: int, secret: Secret | None = None):
    _active(c)
    # The follower-escrow side never lets a follower mutation block the leader's claim.
    c = _unlock_for(c, now, follower_too=c.leader_escrow)
    if caller != c.receiver:
        raise Rejected("not receiver")
    if now > c.timeout:
        raise Rejected("expired")
    if not verify(c.swap_hashlock, secret):
        raise Rejected("wrong preimage")
    return replace(c, status="claimed"), Payout(c.receiver, c.asset)


def refund(c: MutSwapContract, caller: str, now: int):
    _active(c)
    c = _unlock_for(c, now, follower_too=True)
    if caller != c.sender:
        raise Rejected("not sender")
    if now <= c.timeout:
        raise Rejected("not expired")
    return replace(c, status="refunded"), Payout(c.sender, c.asset)


def mutate_lock_leader(c: MutSwapContract, caller: str, now: int, sig: SignedMutation | None = None,
                       candidate: str | None = None, replace_hashlock: Hashlock | None = None,
                       new_swap_hashlock: Hashlock | None = None, seq: int | None = None):
    _active(c)
    c = _expire_leader(c, now)
    multi = c.rules.multi_candidate
    if c.leader_mutation.mutating and not multi:
        raise Rejected("already mutating")
    if caller not in (c.sender, c.receiver):
        raise Rejected("not a swap party")
    margin = LEADER_MUTATE_MARGIN if caller == c.leader else FOLLOWER_MUTATE_MARGIN
    if now > c.last_reveal_round - margin:
        raise Rejected("deadline passed")
    if sig is None or not sig.valid_for(c.leader):
        raise Rejected("bad signature")
    expected = (replace_hashlock, new_swap_hashlock, candidate) + ((seq,) if multi else ())
    if sig.message() != expected:
        raise Rejected("payload mismatch")
    fresh = LeaderMutation(
        voucher=sig, candidate=candidate, mutator=caller, replace_hashlock=replace_hashlock,
        new_swap_hashlock=new_swap_hashlock, start_time=now, approved=False, mutating=True,
        locks_asset=True, seq=seq if multi else None,
    )
    if not multi:
        return replace(c, leader_mutation=fresh), None
    current = c.leader_mutation
    if not current.mutating:
        if seq != c.counter:
            raise Rejected("wrong seq")
        return replace(c, leader_mutation=fresh), None
    if seq == c.counter:
        raise Rejected("seq consumed")
    if seq != c.counter + 1:
        raise Rejected("wrong seq")
    if c.queued_mutation is not None:
        raise Rejected("seq consumed")
    if now - current.start_time <= NEXT_TICKET_AFTER:
        raise Rejected("too early for next ticket")
    return replace(c, queued_mutation=fresh), None


def contest_leader(c: MutSwapContract, caller: str, now: int, sig: SignedMutation | None = None,
                   secret: Secret | None = None, seq: int | None = None):
    _active(c)
    if not c.rules.contest_enabled:
        raise Rejected("contest disabled")
    if caller != c.follower:
        raise Rejected("not follower")
    m, is_current = _target(c, seq)
    if not m.mutating:
        raise Rejected("not mutating")
    if m.approved:
        raise Rejected("approved")
    if m.mutator != c.leader:
        raise Rejected("mutator is follower")
    if not 0 < now - m.start_time <= c.rules.contest_window:
        raise Rejected("window closed")
    inconsistent_sig = sig is not None and sig.valid_for(c.leader) and sig.message() != m.voucher.message()
    if not (inconsistent_sig or verify(c.swap_hashlock, secret)):
        raise Rejected("no evidence")
    if is_current:
        return _drop_current(c), None
    return replace(c, queued_mutation=None), None


def approve_leader(c: MutSwapContract, caller: str, now: int, seq: int | None = None):
    _active(c)
    if caller != c.follower:
        raise Rejected("not follower")
    m, is_current = _target(c, seq)
    if not m.mutating:
        raise Rejected("not mutating")
    if m.mutator != c.leader:
        raise Rejected("mutator is follower")
    if not 0 < now - m.start_time <= c.rules.contest_window:
        raise Rejected("window closed")
    m = replace(m, approved=True)
    return (replace(c, leader_mutation=m) if is_current else replace(c, queued_mutation=m)), None


def replace_leader(c: MutSwapContract, caller: str, now: int, secret: Secret | None = None):
    _active(c)
    m = c.leader_mutation
    if not m.mutating:
        raise Rejected("not mutating")
    elapsed = now - m.start_time
    if m.mutator == c.follower or m.approved:
        candidate_round = caller == m.candidate and 0 < elapsed <= CANDIDATE_REPLACE_LIMIT
    else:
        candidate_round = caller == m.candidate and c.rules.contest_window < elapsed <= CANDIDATE_REPLACE_LIMIT
    # Kept as specified: overlaps the contest window on the contestable path.
    follower_round = caller == c.follower and 0 < elapsed <= FOLLOWER_REPLACE_LIMIT
    if not (candidate_round or follower_round):
        raise Rejected("outside window")
    if not verify(m.replace_hashlock, secret):
        raise Rejected("wrong preimage")
    roles = {"sender": m.candidate} if c.leader_escrow else {"receiver": m.candidate}
    return replace(
        c, leader=m.candidate, swap_hashlock=m.new_swap_hashlock,
        leader_mutation=LeaderMutation(), queued_mutation=None, **roles,
    ), None


def revert_leader(c: MutSwapContract, caller: str, now: int):
    _active(c)
    m = c.leader_mutation
    if not m.mutating:
        raise Rejected("not mutating")
    if now - m.start_time <= LEADER_REVERT_AFTER:
        raise Rejected("too early")
    return _drop_current(c), None


def _mutate_follower(c: MutSwapContract, caller: str, now: int, sig, candidate, replace_hashlock, seq,
                     lock_side: bool):
    _active(c)
    if c.leader_escrow != lock_side:
        raise Rejected("wrong contract side")
    c = _expire_follower(c, now)
    if c.follower_mutation.mutating:
        raise Rejected("already mutating")
    if caller != c.follower:
        raise Rejected("not follower")
    if sig is None or not sig.valid_for(c.follower):
        raise Rejected("bad signature")
    multi = c.rules.multi_candidate
    expected = (replace_hashlock, candidate) + ((seq,) if multi else ())
    if sig.message() != expected:
        raise Rejected("payload mismatch")
    if now > c.last_reveal_round - FOLLOWER_POSITION_MARGIN:
        raise Rejected("deadline passed")
    if multi and seq != c.follower_counter:
        raise Rejected("wrong seq")
    fm = FollowerMutation(voucher=sig, candidate=candidate, replace_hashlock=replace_hashlock,
                          start_time=now, mutating=True, locks_asset=c.follower_mutation.locks_asset,
                          seq=seq if multi else None)
    return replace(c, follower_mutation=fm), None


def mutate_lock_follower(c, caller, now, sig=None, candidate=None, replace_hashlock=None, seq=None):
    return _mutate_follower(c, caller, now, sig, candidate, replace_hashlock, seq, lock_side=True)


def mutate_lock_free_follower(c, caller, now, sig=None, candidate=None, replace_hashlock=None, seq=None):
    return _mutate_follower(c, caller, now, sig, candidate, replace_hashlock, seq, lock_side=False)


def replace_follower(c: MutSwapContract, caller: str, now: int, secret: Secret | None = None):
    _active(c)
    m = c.follower_mutation
    if not m.mutating:
        raise Rejected("not mutating")
    if not 0 < now - m.start_time <= FOLLOWER_REPLACE_WINDOW:
        raise Rejected("outside window")
    if not verify(m.replace_hashlock, secret):
        raise Rejected("wrong preimage")
    roles = {"receiver": m.candidate} if c.leader_escrow else {"sender": m.candidate}
    return replace(c, follower=m.candidate, follower_mutation=FollowerMutation(locks_asset=m.locks_asset),
                   **roles), None


def revert_follower(c: MutSwapContract, caller: str, now: int):
    _active(c)
    m = c.follower_mutation
    if not m.mutating:
        raise Rejected("not mutating")
    if now - m.start_time <= FOLLOWER_REPLACE_WINDOW:
        raise Rejected("too early")
    return _expire_follower(c, now), None


SWAP_FUNCTIONS: dict[str, Callable] = {
    "claim": claim,
    "refund": refund,
    "mutateLockLeader": mutate_lock_leader,
    "contestLeader": contest_leader,
    "approveLeader": approve_leader,
    "replaceLeader": replace_leader,
    "revertLeader": revert_leader,
    "mutateLockFollower": mutate_lock_follower,
    "mutateLockFreeFollower": mutate_lock_free_follower,
    "replaceFollower": replace_follower,
    "revertFollower": revert_follower,
}

HTLC_FUNCTIONS: dict[str, Callable] = {"claim": htlc_claim, "refund": htlc_refund}


# Keyword arguments each transition accepts beyond (state, caller, now).
_ACCEPTS = {fn: frozenset(list(inspect.signature(fn).parameters)[3:])
            for fn in (*SWAP_FUNCTIONS.values(), *HTLC_FUNCTIONS.values())}


def invoke(c: Contract, function: str, caller: str, now: int, args: dict):
    table = SWAP_FUNCTIONS if isinstance(c, MutSwapContract) else HTLC_FUNCTIONS
    fn = table.get(function)
    if fn is None:
        raise Rejected("no such function")
    if not _ACCEPTS[fn].issuperset(args):
        raise Rejected("bad arguments")
    return fn(c, caller, now, **args)


def escrowed(c: Contract) -> AssetAmount | None:
    return c.asset if c.status == "active" else None
