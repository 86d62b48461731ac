"""Party strategies: per-round decision procedures over public chain state and private knowledge."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from . import contracts as ct
from .chain import DEPLOY, ChainLedger, Transaction, make_tx
from .core import AssetAmount, Hashlock, KnowledgeSet, PartyId, SignedMutation, sign

LEADER_ESCROW = ("A", "AB")
FOLLOWER_ESCROW = ("B", "BA")
SWAPS = (LEADER_ESCROW, FOLLOWER_ESCROW)


@dataclass(frozen=True)
class BuyerTerms:
    """Agreement between the leader and one position buyer."""

    name: str
    address: str
    seq: int
    start: int
    replace_hashlock: Hashlock
    swap_hashlock: Hashlock
    asset: AssetAmount
    timeout: int
    chain: str = "C"
    contract_id: str = "CA"

    def payload(self, multi: bool) -> tuple:
        base = (self.replace_hashlock, self.swap_hashlock, self.address)
        return base + (self.seq,) if multi else base


@dataclass(frozen=True)
class FollowerBuyerTerms:
    name: str
    address: str
    start: int
    replace_hashlock: Hashlock
    asset: AssetAmount
    timeout: int
    chain: str = "D"
    contract_id: str = "DB"

    def payload(self) -> tuple:
        return (self.replace_hashlock, self.address)


@dataclass(frozen=True)
class Terms:
    leader: str
    follower: str
    start: int
    dT: int
    leader_asset: AssetAmount
    follower_asset: AssetAmount
    swap_hashlock: Hashlock
    buyers: tuple = ()
    follower_buyer: FollowerBuyerTerms | None = None
    rules: ct.Rules = ct.Rules()

    @property
    def T(self) -> int:
        return self.start + self.dT

    def buyer(self, address: str) -> BuyerTerms | None:
        return next((b for b in self.buyers if b.address == address), None)


@dataclass(frozen=True)
class Observation:
    now: int
    chains: Mapping[str, ChainLedger]
    knowledge: KnowledgeSet
    terms: Terms

    def contract(self, chain: str, cid: str):
        ledger = self.chains.get(chain)
        return ledger.contract(cid) if ledger else None

    def swap(self, which: tuple[str, str]) -> ct.MutSwapContract | None:
        return self.contract(*which)


@dataclass(frozen=True)
class Party:
    id: PartyId
    strategy: str
    params: dict = field(default_factory=dict, compare=False, hash=False)
    private: KnowledgeSet = KnowledgeSet()
    memory: frozenset = frozenset()

    @property
    def address(self) -> str:
        return self.id.address

    @property
    def name(self) -> str:
        return self.id.name


class Turn:
    """Accumulates one party's transactions and memory updates for a single round."""

    def __init__(self, party: Party, obs: Observation) -> None:
        self.party = party
        self.obs = obs
        self.me = party.address
        self.now = obs.now
        self.landing = obs.now + 1
        self.txs: list[Transaction] = []
        self.memory = set(party.memory)
        self.params = party.params

    def remembers(self, key: str) -> bool:
        return key in self.memory

    def send(self, where: tuple[str, str], function: str, once: str | None = None, **args) -> bool:
        tx = make_tx(self.me, where[0], where[1], function, **args)
        if tx in self.txs:
            return False
        if once is not None:
            if once in self.memory:
                return False
            self.memory.add(once)
        self.txs.append(tx)
        return True

    def deploy(self, chain: str, once: str, **args) -> bool:
        if once in self.memory:
            return False
        self.memory.add(once)
        self.txs.append(make_tx(self.me, chain, DEPLOY, "deploy", **args))
        return True

    def sign(self, payload: tuple) -> SignedMutation:
        return sign(self.me, payload)

    def result(self) -> tuple[list[Transaction], frozenset]:
        return self.txs, frozenset(self.memory)


def _tag(payload: tuple) -> str:
    return "|".join(p.digest.hex()[:8] if isinstance(p, Hashlock) else str(p) for p in payload)


def _mutations(c: ct.MutSwapContract) -> list[ct.LeaderMutation]:
    return [m for m in (c.leader_mutation, c.queued_mutation) if m is not None and m.mutating]


def _matching(c: ct.MutSwapContract, m: ct.LeaderMutation) -> ct.LeaderMutation | None:
    """The mutation on c that addresses the same ticket as m (any mutation outside multi mode)."""
    for other in _mutations(c):
        if not c.rules.multi_candidate or other.seq == m.seq:
            return other
    return None


def _both_swaps(obs: Observation):
    return obs.swap(LEADER_ESCROW), obs.swap(FOLLOWER_ESCROW)


# -- setup --------------------------------------------------------------------

def deploy_leader_escrow(t: Turn) -> None:
    terms = t.obs.terms
    if t.now >= terms.start and t.obs.swap(LEADER_ESCROW) is None:
        t.deploy(LEADER_ESCROW[0], once="deploy", kind="swap", contract_id=LEADER_ESCROW[1], sender=t.me,
                 receiver=terms.follower, leader=t.me, follower=terms.follower, asset=terms.leader_asset,
                 start=terms.start, dT=terms.dT, swap_hashlock=terms.swap_hashlock, rules=terms.rules)


def deploy_follower_escrow(t: Turn) -> None:
    terms = t.obs.terms
    ab, ba = _both_swaps(t.obs)
    if ba is not None or ab is None:
        return
    agreed = (ab.sender == terms.leader and ab.receiver == t.me and ab.asset == terms.leader_asset
              and ab.swap_hashlock == terms.swap_hashlock and ab.timeout == terms.T + 1)
    if agreed:
        t.deploy(FOLLOWER_ESCROW[0], once="deploy", kind="swap", contract_id=FOLLOWER_ESCROW[1], sender=t.me,
                 receiver=terms.leader, leader=terms.leader, follower=t.me, asset=terms.follower_asset,
                 start=terms.start, dT=terms.dT, swap_hashlock=terms.swap_hashlock, rules=terms.rules)


# -- shared duties ------------------------------------------------------------

def settle_own_escrows(t: Turn, exercise: bool = True) -> None:
    """Claim where a known preimage opens a swap or timelock; refund what has expired."""
    for chain_id, ledger in sorted(t.obs.chains.items()):
        for cid, c in sorted(ledger.contracts.items()):
            if c.status != "active":
                continue
            where = (chain_id, cid)
            swap = isinstance(c, ct.MutSwapContract)
            if c.receiver == t.me and t.landing <= c.timeout and exercise:
                secret = t.obs.knowledge.preimage_of(c.swap_hashlock)
                if secret is not None and not (swap and _locked(c, t.landing)):
                    t.send(where, "claim", secret=secret)
            if c.sender == t.me and t.landing > c.timeout and not (swap and _locked(c, t.landing)):
                t.send(where, "refund")


def _locked(c: ct.MutSwapContract, when: int) -> bool:
    return ct.leader_locked(c, when) or ct.follower_locked(c, when)


def follower_duties(t: Turn, altruistic: bool = False) -> None:
    """Relay lone mutations, contest inconsistent ones, forward revealed replace secrets."""
    obs = t.obs
    ab, ba = _both_swaps(obs)
    if ab is None or ba is None:
        return
    contesting: set[str] = set()
    pairs = ((LEADER_ESCROW, ab, FOLLOWER_ESCROW, ba), (FOLLOWER_ESCROW, ba, LEADER_ESCROW, ab))
    for here_id, here, there_id, there in pairs:
        if here.status != "active" or here.follower != t.me:
            continue
        for m in _mutations(here):
            other = _matching(there, m) if there.status == "active" else None
            early = obs.knowledge.preimage_of(here.swap_hashlock)
            if ct.contestable(here, m, t.landing) and here.rules.contest_enabled:
                # An early reveal is harmless while the other side carries the same mutation or still can.
                stranded = (there.status != "active" or (other is not None and other.voucher.message() != m.voucher.message())
                            or (other is None and t.landing > there.last_reveal_round - ct.FOLLOWER_MUTATE_MARGIN))
                if early is not None and stranded:
                    t.send(here_id, "contestLeader",
                           secret=early, seq=m.seq)
                    contesting.add(here_id[1])
                    continue
                if other is not None and other.voucher.message() != m.voucher.message():
                    t.send(here_id, "contestLeader",
                           sig=other.voucher, seq=m.seq)
                    contesting.add(here_id[1])
                    continue
            if (altruistic and ct.contestable(here, m, t.landing) and early is None and other is not None
                    and other.voucher.message() == m.voucher.message()):
                t.send(here_id, "approveLeader", seq=m.seq)
        if here.leader_mutation.mutating:
            m = here.leader_mutation
            secret = obs.knowledge.preimage_of(m.replace_hashlock)
            finished_there = there.leader == m.candidate and there.swap_hashlock == m.new_swap_hashlock
            if secret is not None and finished_there and 0 < t.landing - m.start_time <= ct.FOLLOWER_REPLACE_LIMIT:
                t.send(here_id, "replaceLeader", secret=secret)
    # Relay onto the other contract only when it has nothing for that ticket yet.
    for here_id, here, there_id, there in pairs:
        if there.status != "active" or there.follower != t.me or t.me not in (there.sender, there.receiver):
            continue
        if t.landing > there.last_reveal_round - ct.FOLLOWER_MUTATE_MARGIN:
            continue
        for m in _mutations(here):
            if not m.voucher.valid_for(there.leader) or _matching(there, m) is not None:
                continue
            if not there.rules.multi_candidate and there.leader_mutation.mutating:
                continue
            repl, swap_hl, cand = m.voucher.message()[:3]
            t.send(there_id, "mutateLockLeader",
                   sig=m.voucher, candidate=cand, replace_hashlock=repl, new_swap_hashlock=swap_hl, seq=m.seq)
    for here_id, here in ((LEADER_ESCROW, ab), (FOLLOWER_ESCROW, ba)):
        if here.status == "active" and here.receiver == t.me and t.landing <= here.timeout:
            secret = obs.knowledge.preimage_of(here.swap_hashlock)
            unlocked = not _locked(here, t.landing) or (here_id[1] in contesting and not ct.follower_locked(here, t.landing))
            if secret is not None and unlocked:
                t.send(here_id, "claim", secret=secret)
        if here.status == "active" and here.sender == t.me and t.landing > here.timeout and not _locked(here, t.landing):
            t.send(here_id, "refund")


# -- leader seller --------------------------------------------------------------

def _ca_agreed(obs: Observation, b: BuyerTerms, me: str) -> bool:
    ca = obs.contract(b.chain, b.contract_id)
    return (isinstance(ca, ct.HtlcContract) and ca.status == "active" and ca.sender == b.address
            and ca.receiver == me and ca.asset == b.asset and ca.swap_hashlock == b.replace_hashlock
            and ca.timeout >= b.timeout and ca.created <= b.start + 1)


def _still_leader(obs: Observation, me: str) -> bool:
    ab, ba = _both_swaps(obs)
    return all(c is not None and c.status == "active" and c.leader == me for c in (ab, ba))


def _next_buyer(t: Turn) -> BuyerTerms | None:
    """The next buyer whose ticket Alice may issue this round, honouring the ticket spacing."""
    terms = t.obs.terms
    multi = terms.rules.multi_candidate
    buyers = sorted(terms.buyers, key=lambda b: b.seq)
    if not multi:
        buyers = buyers[:1]
    for i, b in enumerate(buyers):
        if t.remembers(f"mutate:{b.seq}"):
            continue
        if not _ca_agreed(t.obs, b, t.me):
            return None
        if i > 0:
            prev = next((m for m in t.memory if m.startswith(f"mutated-at:{buyers[i - 1].seq}:")), None)
            if prev is None or t.landing - int(prev.rsplit(":", 1)[1]) <= ct.NEXT_TICKET_AFTER:
                return None
        return b
    return None


def _issue_ticket(t: Turn, b: BuyerTerms, targets=SWAPS, payloads: dict | None = None) -> None:
    terms = t.obs.terms
    multi = terms.rules.multi_candidate
    t.memory.add(f"mutate:{b.seq}")
    t.memory.add(f"mutated-at:{b.seq}:{t.landing}")
    for where in targets:
        payload = (payloads or {}).get(where, b.payload(multi))
        sig = t.sign(payload)
        t.send(where, "mutateLockLeader", sig=sig, candidate=payload[2], replace_hashlock=payload[0],
               new_swap_hashlock=payload[1], seq=payload[3] if multi else None)


def _transfer_window_open(t: Turn) -> bool:
    return t.landing <= t.obs.terms.T - ct.LEADER_MUTATE_MARGIN and _still_leader(t.obs, t.me)


def _leader_housekeeping(t: Turn) -> None:
    obs = t.obs
    for b in obs.terms.buyers:
        ca = obs.contract(b.chain, b.contract_id)
        if isinstance(ca, ct.HtlcContract) and ca.status == "active" and ca.receiver == t.me:
            secret = obs.knowledge.preimage_of(ca.swap_hashlock)
            if secret is not None and t.landing <= ca.timeout:
                t.send((b.chain, b.contract_id), "claim", secret=secret)
    if obs.terms.rules.multi_candidate:
        for where in SWAPS:
            c = obs.swap(where)
            if c is not None and c.status == "active" and c.leader == t.me:
                m = c.leader_mutation
                if m.mutating and t.landing - m.start_time > ct.LEADER_REVERT_AFTER:
                    t.send(where, "revertLeader")
    ab = obs.swap(LEADER_ESCROW)
    if ab is not None and ab.status == "active" and ab.sender == t.me and t.landing > ab.timeout \
            and not _locked(ab, t.landing):
        t.send(LEADER_ESCROW, "refund")


def _exercise(t: Turn) -> None:
    ba = t.obs.swap(FOLLOWER_ESCROW)
    if ba is None or ba.status != "active" or ba.receiver != t.me:
        return
    secret = t.party.private.preimage_of(ba.swap_hashlock)
    if secret is None:
        return
    at = t.params.get("exercise_at")
    if at is not None and t.now >= at and not _locked(ba, t.landing):
        t.send(FOLLOWER_ESCROW, "claim", secret=secret)
        return
    if t.params.get("after_failed") == "exercise" and any(k.startswith("mutate:") for k in t.memory):
        ab = t.obs.swap(LEADER_ESCROW)
        mutated = [c for c in (ab, ba) if c is not None and c.leader_mutation.mutating]
        if _still_leader(t.obs, t.me) and all(t.landing - c.leader_mutation.start_time > ct.LEADER_REVERT_AFTER
                                              for c in mutated):
            t.send(FOLLOWER_ESCROW, "claim", secret=secret)


def conforming_alice(t: Turn) -> None:
    deploy_leader_escrow(t)
    _exercise(t)
    if _transfer_window_open(t):
        b = _next_buyer(t)
        if b is not None:
            _issue_ticket(t, b)
    _leader_housekeeping(t)


# -- follower and buyers --------------------------------------------------------

def conforming_bob(t: Turn) -> None:
    if t.params.get("deploy", True):
        deploy_follower_escrow(t)
    follower_duties(t, altruistic=False)


def altruistic_bob(t: Turn) -> None:
    deploy_follower_escrow(t)
    follower_duties(t, altruistic=True)


def _deploy_ca(t: Turn, b: BuyerTerms) -> None:
    if t.now >= b.start and t.obs.contract(b.chain, b.contract_id) is None:
        t.deploy(b.chain, once=f"deploy:{b.contract_id}", kind="htlc", contract_id=b.contract_id, sender=t.me,
                 receiver=t.obs.terms.leader, asset=b.asset, swap_hashlock=b.replace_hashlock, timeout=b.timeout)


def _release_ready(t: Turn, b: BuyerTerms) -> bool:
    """Both swaps carry this buyer's mutation and no contest can land any more, with time to finish."""
    obs = t.obs
    multi = obs.terms.rules.multi_candidate
    ca = obs.contract(b.chain, b.contract_id)
    if not isinstance(ca, ct.HtlcContract) or ca.status != "active" or t.landing + 1 > ca.timeout:
        return False
    for where in SWAPS:
        c = obs.swap(where)
        if c is None or c.status != "active":
            return False
        m = c.leader_mutation
        if not m.mutating or m.voucher.message() != b.payload(multi) or not m.voucher.valid_for(c.leader):
            return False
        fast = m.mutator == c.follower or m.approved
        if not fast and t.now - m.start_time < c.rules.contest_window:
            return False
        if t.landing - m.start_time > ct.CANDIDATE_REPLACE_LIMIT:
            return False
    return True


def conforming_carol(t: Turn, only: tuple = SWAPS, release: bool = True) -> None:
    b = t.obs.terms.buyer(t.me)
    if b is None:
        return
    _deploy_ca(t, b)
    if release and not t.remembers("release") and _release_ready(t, b):
        t.memory.add("release")
        secret = t.party.private.preimage_of(b.replace_hashlock)
        for where in only:
            t.send(where, "replaceLeader", secret=secret)
    settle_own_escrows(t, exercise=bool(t.params.get("exercise")))


def griefing_carol(t: Turn) -> None:
    conforming_carol(t, release=False)


def replace_one_contract_only(t: Turn) -> None:
    which = FOLLOWER_ESCROW if t.params.get("which", "BA") == "BA" else LEADER_ESCROW
    conforming_carol(t, only=(which,))


def conforming_david(t: Turn) -> None:
    fb = t.obs.terms.follower_buyer
    if fb is None or fb.address != t.me:
        return
    if t.now >= fb.start and t.obs.contract(fb.chain, fb.contract_id) is None:
        t.deploy(fb.chain, once="deploy:DB", kind="htlc", contract_id=fb.contract_id, sender=t.me,
                 receiver=t.obs.terms.follower, asset=fb.asset, swap_hashlock=fb.replace_hashlock, timeout=fb.timeout)
    db = t.obs.contract(fb.chain, fb.contract_id)
    swaps = _both_swaps(t.obs)
    ready = (isinstance(db, ct.HtlcContract) and db.status == "active" and t.landing + 1 <= db.timeout
             and all(c is not None and c.status == "active" and c.follower_mutation.mutating
                     and c.follower_mutation.candidate == t.me and c.follower_mutation.replace_hashlock == fb.replace_hashlock
                     and c.follower_mutation.voucher.valid_for(c.follower)
                     and t.landing - c.follower_mutation.start_time <= ct.FOLLOWER_REPLACE_WINDOW for c in swaps)
             and _leader_side_agrees(*swaps))
    if ready and not t.remembers("release"):
        t.memory.add("release")
        secret = t.party.private.preimage_of(fb.replace_hashlock)
        for where in SWAPS:
            t.send(where, "replaceFollower", secret=secret)
    settle_own_escrows(t)
    follower_duties(t)


def _leader_side_agrees(ab: ct.MutSwapContract, ba: ct.MutSwapContract) -> bool:
    """No leader mutation in flight, or the same voucher in flight on both contracts."""
    a, b = _mutations(ab), _mutations(ba)
    if not a and not b:
        return True
    return len(a) == len(b) and all(x.voucher.message() == y.voucher.message() for x, y in zip(a, b))


def _db_agreed(obs: Observation, me: str) -> bool:
    fb = obs.terms.follower_buyer
    if fb is None:
        return False
    db = obs.contract(fb.chain, fb.contract_id)
    return (isinstance(db, ct.HtlcContract) and db.status == "active" and db.sender == fb.address
            and db.receiver == me and db.asset == fb.asset and db.swap_hashlock == fb.replace_hashlock
            and db.timeout >= fb.timeout and db.created <= fb.start + 1)


def conforming_bob_seller(t: Turn) -> None:
    deploy_follower_escrow(t)
    obs = t.obs
    fb = obs.terms.follower_buyer
    ab, ba = _both_swaps(obs)
    if (fb is not None and ab is not None and ba is not None and _db_agreed(obs, t.me)
            and all(c.status == "active" and c.follower == t.me for c in (ab, ba))
            and obs.knowledge.preimage_of(ba.swap_hashlock) is None
            and t.landing <= obs.terms.T - ct.FOLLOWER_POSITION_MARGIN and not t.remembers("sell")):
        t.memory.add("sell")
        sig = t.sign(fb.payload())
        t.send(LEADER_ESCROW, "mutateLockFollower", sig=sig, candidate=fb.address, replace_hashlock=fb.replace_hashlock)
        t.send(FOLLOWER_ESCROW, "mutateLockFreeFollower", sig=sig, candidate=fb.address,
               replace_hashlock=fb.replace_hashlock)
    if fb is not None:
        db = obs.contract(fb.chain, fb.contract_id)
        if isinstance(db, ct.HtlcContract) and db.status == "active" and db.receiver == t.me:
            secret = obs.knowledge.preimage_of(db.swap_hashlock)
            if secret is not None and t.landing <= db.timeout:
                t.send((fb.chain, fb.contract_id), "claim", secret=secret)
    follower_duties(t)


def bob_seller_and_david_buyer(t: Turn) -> None:
    fb = t.obs.terms.follower_buyer
    if fb is not None and fb.address == t.me:
        conforming_david(t)
    else:
        conforming_bob_seller(t)


# -- adversary library ------------------------------------------------------------

def _fresh_lock(t: Turn, label: str = "X1") -> Hashlock:
    from .core import hash_secret
    secret = next((s for s in t.party.private.secrets if s.label.endswith(label)), None)
    if secret is None:
        raise ValueError(f"{t.party.name} has no fresh secret labelled {label}")
    return hash_secret(secret)


def _deviating_alice(t: Turn, issue: Callable[[Turn, BuyerTerms], None]) -> None:
    deploy_leader_escrow(t)
    _exercise(t)
    if _transfer_window_open(t):
        b = _next_buyer(t)
        if b is not None:
            issue(t, b)
    _leader_housekeeping(t)


def inconsistent_hashlocks(t: Turn) -> None:
    def issue(t: Turn, b: BuyerTerms) -> None:
        good = b.payload(t.obs.terms.rules.multi_candidate)
        bad = (good[0], _fresh_lock(t), *good[2:])
        _issue_ticket(t, b, payloads={FOLLOWER_ESCROW: bad})
    _deviating_alice(t, issue)


def mutate_one_contract_only(t: Turn) -> None:
    which = FOLLOWER_ESCROW if t.params.get("which") == "BA" else LEADER_ESCROW
    _deviating_alice(t, lambda t, b: _issue_ticket(t, b, targets=(which,)))


def claim_ba_then_mutate_ab(t: Turn) -> None:
    def issue(t: Turn, b: BuyerTerms) -> None:
        _issue_ticket(t, b, targets=(LEADER_ESCROW,))
        ba = t.obs.swap(FOLLOWER_ESCROW)
        t.send(FOLLOWER_ESCROW, "claim", once="exercise", secret=t.party.private.preimage_of(ba.swap_hashlock))
    _deviating_alice(t, issue)


def staggered_consistent_mutations(t: Turn) -> None:
    """Mutates the leader-escrow side first and the other side one round later."""
    def issue(t: Turn, b: BuyerTerms) -> None:
        _issue_ticket(t, b, targets=(LEADER_ESCROW,))
        t.memory.add(f"stagger:{b.seq}")
    deploy_leader_escrow(t)
    _exercise(t)
    pending = [k for k in t.memory if k.startswith("stagger:")]
    if pending:
        seq = int(pending[0].split(":")[1])
        b = next(b for b in t.obs.terms.buyers if b.seq == seq)
        t.memory.discard(pending[0])
        payload = b.payload(t.obs.terms.rules.multi_candidate)
        if t.params.get("inconsistent"):
            payload = (payload[0], _fresh_lock(t), *payload[2:])
        _send_mutation(t, FOLLOWER_ESCROW, payload)
    elif _transfer_window_open(t):
        b = _next_buyer(t)
        if b is not None:
            issue(t, b)
    _leader_housekeeping(t)


def _send_mutation(t: Turn, where, payload: tuple) -> None:
    multi = t.obs.terms.rules.multi_candidate
    t.send(where, "mutateLockLeader", sig=t.sign(payload), candidate=payload[2], replace_hashlock=payload[0],
           new_swap_hashlock=payload[1], seq=payload[3] if multi else None)


def duplicate_seq_assignment(t: Turn) -> None:
    """Hands the same ticket number to two buyers, one per contract."""
    deploy_leader_escrow(t)
    buyers = sorted(t.obs.terms.buyers, key=lambda b: b.seq)
    if len(buyers) >= 2 and not t.remembers("duplicate") and _transfer_window_open(t) \
            and _ca_agreed(t.obs, buyers[0], t.me) and _ca_agreed(t.obs, buyers[1], t.me):
        t.memory.add("duplicate")
        first, second = buyers[0], buyers[1]
        _send_mutation(t, LEADER_ESCROW, first.payload(True))
        dup = second.payload(True)[:3] + (first.seq,)
        _send_mutation(t, FOLLOWER_ESCROW, dup)
    _leader_housekeeping(t)


def silent(t: Turn) -> None:
    if not t.params.get("setup"):
        return
    if t.me == t.obs.terms.leader:
        deploy_leader_escrow(t)
    elif t.me == t.obs.terms.follower:
        deploy_follower_escrow(t)


def explorer_driven(t: Turn) -> None:
    """Placeholder: the explorer supplies this party's transactions directly."""


STRATEGIES: dict[str, Callable[[Turn], None]] = {
    "conformingAliceLeaderSeller": conforming_alice,
    "conformingBobFollower": conforming_bob,
    "altruisticBobFollower": altruistic_bob,
    "conformingCarolBuyer": conforming_carol,
    "conformingBobSeller": conforming_bob_seller,
    "conformingDavidBuyer": conforming_david,
    "conformingBobSellerAndDavidBuyer": bob_seller_and_david_buyer,
    "inconsistentHashlocks": inconsistent_hashlocks,
    "mutateOneContractOnly": mutate_one_contract_only,
    "claimBAThenMutateAB": claim_ba_then_mutate_ab,
    "griefingCarol": griefing_carol,
    "silent": silent,
    "staggeredConsistentMutations": staggered_consistent_mutations,
    "replaceOneContractOnly": replace_one_contract_only,
    "duplicateSeqAssignment": duplicate_seq_assignment,
    "explorer": explorer_driven,
}

CONFORMING = frozenset({
    "conformingAliceLeaderSeller", "conformingBobFollower", "altruisticBobFollower", "conformingCarolBuyer",
    "conformingBobSeller", "conformingDavidBuyer", "conformingBobSellerAndDavidBuyer",
})


def decide(party: Party, obs: Observation) -> tuple[list[Transaction], frozenset]:
    try:
        strategy = STRATEGIES[party.strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {party.strategy!r}") from None
    turn = Turn(party, obs)
    strategy(turn)
    return turn.result()
