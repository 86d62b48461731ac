"""Bounded exhaustive exploration of adversarial action sets and same-round orderings."""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from . import contracts as ct
from .chain import ChainLedger, Transaction, make_tx
from .core import Hashlock, Secret, SignedMutation, canonical, hash_secret, sign
from .harness import (ConfigError, ScenarioConfig, address_of, build_world, transfer_finalized, underwater)
from .scheduler import WorldState, collect, decisions, execute, gate_reason, step, submit

@dataclass(frozen=True)
class Property:
    """A safety predicate over (initial world, world). `leaf_only` defers it to the horizon."""

    property_id: str
    check: Callable[[WorldState, WorldState], bool]
    leaf_only: bool = True


@dataclass(frozen=True)
class ExploreConfig:
    adversaries: tuple
    # Leader vouchers the adversaries may sign: (replace label, swap label, candidate name).
    leader_payloads: tuple = ()
    # Follower vouchers: (replace label, candidate name).
    follower_payloads: tuple = ()
    scope: tuple = (("A", "AB"), ("B", "BA"))
    horizon: int | None = None
    dedup: bool = True
    # Adversaries follow their scenario strategy until this round has executed.
    explore_from: int = 2
    max_action_sets: int = 20000
    max_order_states: int = 50000
    # Drop pure reveals of secrets whose hashlock cannot matter yet (see enabled_alphabet).
    defer_reveals: bool = True
    time_budget: float | None = None


@dataclass(frozen=True)
class ScheduleStep:
    round: int
    injected: tuple  # (party address, Transaction) in submission order
    orders: tuple  # (chain id, permutation) applied when those transactions land
    # Execution position of each injected call in its chain's next round; None if the gate refused it.
    positions: tuple = ()


@dataclass
class Violation:
    property_id: str
    schedule: tuple


@dataclass
class ExploreReport:
    name: str
    states_visited: int = 0
    dedup_hits: int = 0
    leaves: int = 0
    violations: list = field(default_factory=list)
    truncations: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def holds(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "exploration": self.name,
            "states_visited": self.states_visited,
            "dedup_hits": self.dedup_hits,
            "leaves": self.leaves,
            "violations": [{"property": v.property_id, "schedule": schedule_record(v.schedule)}
                           for v in self.violations],
            "truncations": self.truncations,
            "holds": self.holds,
        }

    def text(self, with_time: bool = False) -> str:
        out = self.to_dict()
        if with_time:
            out["elapsed_seconds"] = round(self.elapsed, 3)
        return json.dumps(out, indent=2)


def _arg_record(value):
    if isinstance(value, Secret):
        return {"secret": value.label}
    if isinstance(value, SignedMutation):
        return {"signed_by": value.signer, "payload": canonical(value.payload)}
    return canonical(value)


def schedule_record(schedule: Sequence[ScheduleStep]) -> list[dict]:
    """Ordered (round, party, transaction, position-in-round) records, plus the chosen chain orders."""
    out = []
    for st in schedule:
        positions = st.positions or (None,) * len(st.injected)
        for (party, tx), pos in zip(st.injected, positions):
            out.append({"round": st.round, "party": party, "chain": tx.chain, "contract": tx.target,
                        "function": tx.function, "args": {k: _arg_record(v) for k, v in tx.args},
                        "position": pos})
        for chain, perm in st.orders:
            out.append({"round": st.round + 1, "chain": chain, "order": list(perm)})
    return out


# -- world setup ----------------------------------------------------------------

def _payload_locks(world: WorldState, labels: Iterable[str]) -> dict[str, Secret]:
    found = {}
    for p in world.parties:
        for s in p.private.secrets:
            found[s.label] = s
    return found


def leader_payload(secrets: dict, entry: tuple, multi_seq: int | None = None) -> tuple:
    repl, swap, candidate = entry
    payload = (hash_secret(secrets[repl]), hash_secret(secrets[swap]), address_of(candidate))
    return payload + ((multi_seq,) if multi_seq is not None else ())


def prepare(cfg: ScenarioConfig, ecfg: ExploreConfig) -> WorldState:
    """Run the scenario up to the exploration start and hand the adversaries to the explorer."""
    names = {p.name for p in cfg.parties}
    for a in ecfg.adversaries:
        if a not in names:
            raise ConfigError(f"adversary {a!r} is not a party")
    horizon = horizon_of(cfg, ecfg)
    if horizon > cfg.T + 2:
        raise ConfigError("exploration horizon must not exceed T+2")
    world = _scripted_prefix(cfg, ecfg, record=False)
    adv = {address_of(a) for a in ecfg.adversaries}
    secrets = _payload_locks(world, ())
    seeded = []
    for p in world.parties:
        if p.address not in adv:
            seeded.append(p)
            continue
        sigs = set()
        if p.address == world.terms.leader:
            sigs |= {sign(p.address, leader_payload(secrets, e)) for e in ecfg.leader_payloads}
        if p.address == world.terms.follower:
            sigs |= {sign(p.address, (hash_secret(secrets[r]), address_of(c))) for r, c in ecfg.follower_payloads}
        seeded.append(replace(p, strategy="explorer", private=p.private.add((), sigs)))
    world = replace(world, parties=tuple(seeded))
    return execute(world, record=False)


def horizon_of(cfg: ScenarioConfig, ecfg: ExploreConfig) -> int:
    return cfg.T + 2 if ecfg.horizon is None else ecfg.horizon


def relevant_secrets(world: WorldState, ecfg: ExploreConfig) -> frozenset:
    """Protocol secrets plus the fresh ones named in a payload pool."""
    named = {e[0] for e in ecfg.leader_payloads} | {e[1] for e in ecfg.leader_payloads}
    named |= {e[0] for e in ecfg.follower_payloads}
    out = set()
    for p in world.parties:
        for s in p.private.secrets:
            if ".X" not in s.label or s.label in named:
                out.add(s)
    return frozenset(out)


# -- alphabet -------------------------------------------------------------------

@lru_cache(maxsize=None)
def _signature_order(sig) -> str:
    return json.dumps(canonical(sig))


_CANDIDATES: dict = {}


def candidate_calls(world: WorldState, address: str, scope: Sequence, secrets: frozenset) -> list[Transaction]:
    """Every call shape on the scoped contracts with arguments drawn from the party's knowledge."""
    known = world.knowledge_of(address)
    contracts = tuple(world.chains[chain].contract(cid) for chain, cid in scope)
    # Contract objects are immutable and shared between worlds, so identity is a safe cache key;
    # the cached entry keeps them alive so their ids cannot be reused.
    key = (address, tuple(scope), known.secrets & secrets, known.signatures, tuple(map(id, contracts)))
    hit = _CANDIDATES.get(key)
    if hit is None:
        if len(_CANDIDATES) > 200_000:
            _CANDIDATES.clear()
        hit = _CANDIDATES[key] = (contracts, _candidate_calls(address, scope, contracts, key[2], known.signatures))
    return hit[1]


def _candidate_calls(address: str, scope: Sequence, contracts: tuple, secrets: frozenset,
                     signatures: frozenset) -> list[Transaction]:
    usable = sorted(secrets, key=lambda s: s.label)
    sigs = sorted(signatures, key=_signature_order)
    out: list[Transaction] = []
    for (chain, cid), c in zip(scope, contracts):
        if c is None or c.status != "active":
            continue
        if isinstance(c, ct.HtlcContract):
            out += [make_tx(address, chain, cid, "claim", secret=s) for s in usable]
            out.append(make_tx(address, chain, cid, "refund"))
            continue
        multi = c.rules.multi_candidate
        out += [make_tx(address, chain, cid, "claim", secret=s) for s in usable]
        out.append(make_tx(address, chain, cid, "refund"))
        for sig in sigs:
            pl = sig.payload
            if len(pl) == (4 if multi else 3):
                out.append(make_tx(address, chain, cid, "mutateLockLeader", sig=sig, candidate=pl[2],
                                   replace_hashlock=pl[0], new_swap_hashlock=pl[1], seq=pl[3] if multi else None))
                for m in (c.leader_mutation, c.queued_mutation):
                    if m is not None and m.mutating:
                        out.append(make_tx(address, chain, cid, "contestLeader", sig=sig, seq=m.seq))
            elif len(pl) == (3 if multi else 2):
                fn = "mutateLockFollower" if c.leader_escrow else "mutateLockFreeFollower"
                out.append(make_tx(address, chain, cid, fn, sig=sig, candidate=pl[1], replace_hashlock=pl[0],
                                   seq=pl[2] if multi else None))
        for m in (c.leader_mutation, c.queued_mutation):
            if m is not None and m.mutating:
                out += [make_tx(address, chain, cid, "contestLeader", secret=s, seq=m.seq) for s in usable]
                out.append(make_tx(address, chain, cid, "approveLeader", seq=m.seq))
        out += [make_tx(address, chain, cid, "replaceLeader", secret=s) for s in usable]
        out.append(make_tx(address, chain, cid, "revertLeader"))
        out += [make_tx(address, chain, cid, "replaceFollower", secret=s) for s in usable]
        out.append(make_tx(address, chain, cid, "revertFollower"))
    return out


def _hashlocks_in_play(ledger, txs: Sequence[Transaction]) -> set:
    locks = set()
    for c in ledger.contracts.values():
        locks.add(c.swap_hashlock)
        if isinstance(c, ct.MutSwapContract):
            for m in (c.leader_mutation, c.queued_mutation):
                if m is not None:
                    locks.update((m.replace_hashlock, m.new_swap_hashlock))
            locks.add(c.follower_mutation.replace_hashlock)
    for tx in txs:
        locks.update(v for _, v in tx.args if isinstance(v, Hashlock))
    locks.discard(None)
    return locks


def _accepted(ledger, tx: Transaction, now: int) -> bool:
    return ledger.apply(tx, now)[1].accepted


def enabled_alphabet(world: WorldState, adversaries: Sequence[str], scope: Sequence, secrets: frozenset,
                     others: Sequence[Transaction], memo: dict | None = None,
                     defer_reveals: bool = False) -> list[list[Transaction]]:
    return _alphabet(world, adversaries, scope, secrets, others, memo, defer_reveals)[0]


def _alphabet(world: WorldState, adversaries: Sequence[str], scope: Sequence, secrets: frozenset,
              others: Sequence[Transaction], memo: dict | None, defer_reveals: bool) -> tuple[list, dict]:
    """Slots of mutually exclusive variants, one slot per (caller, contract, function).

    A call is kept when it would be accepted alone or right after one other same-round call on its chain.
    A call that is never accepted is kept only as the first carrier, per chain, of a not-yet-public secret.
    With defer_reveals, such a pure reveal is also dropped while the secret's hashlock is not live: not in any
    contract, not in a conforming call this round, and not in an enabled call on the same chain. Conforming
    parties only look up preimages of hashlocks held in contract state, so publishing earlier than the round
    the hashlock can land gives nobody anything, and the same-chain carrier keeps the last useful moment.
    The search applies the same rule per action set: a reveal needs its hashlock live already or carried by
    another call chosen on that chain.
    """
    landing = world.now + 1
    cands = [tx for a in adversaries for tx in candidate_calls(world, a, scope, secrets)]
    by_chain: dict[str, list[Transaction]] = {}
    for tx in cands:
        by_chain.setdefault(tx.chain, []).append(tx)
    other_by_chain: dict[str, list[Transaction]] = {}
    for tx in others:
        other_by_chain.setdefault(tx.chain, []).append(tx)
    enabled: set = set()
    for chain_id, txs in by_chain.items():
        ledger = world.chains[chain_id]
        key = (id(ledger), landing, tuple(txs), tuple(other_by_chain.get(chain_id, ())))
        hit = memo.get(key) if memo is not None else None
        if hit is None:
            flags = _chain_enabled(ledger, landing, txs, other_by_chain.get(chain_id, []))
            if memo is not None:
                memo[key] = (ledger, flags)
        else:
            flags = hit[1]
        enabled.update(tx for tx, ok in zip(txs, flags) if ok)
    public = world.public.secrets
    live = _live_hashlocks(world, others) if defer_reveals else None
    live_by_chain: dict[str, set] = {}
    revealed_here: set = set()
    reveals: dict = {}
    slots: dict[tuple, list[Transaction]] = {}
    for tx in cands:
        if tx not in enabled:
            fresh = [s for s in tx.secrets() if s not in public and (tx.chain, s) not in revealed_here]
            if live is not None:
                if tx.chain not in live_by_chain:
                    live_by_chain[tx.chain] = live | {v for t in by_chain[tx.chain] if t in enabled
                                                      for _, v in t.args if isinstance(v, Hashlock)}
                fresh = [s for s in fresh if hash_secret(s) in live_by_chain[tx.chain]]
            if not fresh:
                continue
            revealed_here.update((tx.chain, s) for s in fresh)
            reveals[tx] = frozenset(hash_secret(s) for s in fresh)
        slots.setdefault((tx.submitter, tx.chain, tx.target, tx.function), []).append(tx)
    return [slots[k] for k in sorted(slots)], reveals


def _live_hashlocks(world: WorldState, others: Sequence[Transaction]) -> set:
    """Hashlocks a conforming party could look up a preimage for: contract state plus this round's conforming calls."""
    locks: set = set()
    for ledger in world.chains.values():
        locks |= _hashlocks_in_play(ledger, ())
    for tx in others:
        locks.update(v for _, v in tx.args if isinstance(v, Hashlock))
    return locks


def _chain_enabled(ledger, landing: int, txs: Sequence[Transaction], others: Sequence[Transaction]) -> list[bool]:
    everyone = list(txs) + list(others)
    in_play = _hashlocks_in_play(ledger, everyone)
    distinct: dict = {}
    for other in everyone:
        after, res = ledger.apply(other, landing)
        if res.accepted:
            distinct.setdefault(after.contracts.get(other.target), (other, after))
    afters = list(distinct.values())
    flags = []
    for tx in txs:
        carried = tx.secrets()
        # A secret that opens nothing on this chain this round can only matter as a reveal.
        if carried and hash_secret(carried[0]) not in in_play:
            flags.append(False)
            continue
        ok = _accepted(ledger, tx, landing) or any(
            other != tx and _accepted(after, tx, landing) for other, after in afters)
        flags.append(ok)
    return flags


# -- search ---------------------------------------------------------------------

class _Search:
    def __init__(self, cfg: ScenarioConfig, ecfg: ExploreConfig, properties: Sequence[Property], name: str):
        self.cfg = cfg
        self.ecfg = ecfg
        self.properties = list(properties)
        self.report = ExploreReport(name)
        self.horizon = horizon_of(cfg, ecfg)
        self.seen: set = set()
        self.exec_memo: dict = {}
        self.choice_memo: dict = {}
        # Keyed by ledger identity; each value pins its ledger so the id stays valid.
        self.alphabet_memo: dict = {}
        self.deadline = None if ecfg.time_budget is None else time.monotonic() + ecfg.time_budget
        self.violated: set = set()

    def start(self) -> WorldState:
        """The root world; also fixes the coalition facts the search keys on."""
        root = prepare(self.cfg, self.ecfg)
        self.initial = build_world(self.cfg)
        self.adv = tuple(address_of(a) for a in self.ecfg.adversaries)
        self.skip = frozenset(self.adv)
        self.secrets = relevant_secrets(root, self.ecfg)
        self.coalition_sigs = frozenset(sig for p in root.parties if p.address in self.skip
                                        for sig in p.private.signatures if sig.signer in self.skip)
        return root

    def run(self) -> ExploreReport:
        start = time.monotonic()
        self._visit(self.start(), ())
        self.report.elapsed = time.monotonic() - start
        return self.report

    def _check(self, world: WorldState, schedule: tuple, leaf: bool) -> None:
        for prop in self.properties:
            if prop.leaf_only and not leaf:
                continue
            if prop.property_id in self.violated:
                continue
            if not prop.check(self.initial, world):
                self.violated.add(prop.property_id)
                self.report.violations.append(Violation(prop.property_id, schedule))

    def _key(self, world: WorldState) -> tuple:
        """World identity up to publication of the coalition's own signatures.

        The coalition holds those privately from the start, and conforming parties only ever pass signatures
        that sit in contract state, so whether such a signature is public changes no enabled behavior.
        """
        public = world.public
        return (world.now, tuple(world.chains[c].key() for c in sorted(world.chains)), world.parties,
                public.secrets, public.signatures - self.coalition_sigs)

    def _visit(self, world: WorldState, schedule: tuple) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            if "time budget exhausted" not in self.report.truncations:
                self.report.truncations.append("time budget exhausted")
            return
        if self.ecfg.dedup:
            key = self._key(world)
            if key in self.seen:
                self.report.dedup_hits += 1
                return
            self.seen.add(key)
        self.report.states_visited += 1
        leaf = world.now >= self.horizon
        self._check(world, schedule, leaf)
        if leaf:
            self.report.leaves += 1
            return
        for child, st in self.children(world):
            self._visit(child, schedule + (st,))

    def children(self, world: WorldState):
        """Distinct successor worlds. Chains are isolated, so choices are enumerated and deduplicated per chain."""
        decided = decisions(world, self.skip)
        conforming = [tx for txs, _ in decided.values() for tx in txs]
        slots, reveals = _alphabet(world, self.adv, self.ecfg.scope, self.secrets, conforming, self.alphabet_memo,
                                   self.ecfg.defer_reveals)
        live = _live_hashlocks(world, conforming) if self.ecfg.defer_reveals else None
        base, conf_txs = collect(world, {}, self.skip, decided)
        base = submit(base, conf_txs, record=False)
        slots_by_chain: dict[str, list] = {}
        for slot in slots:
            slots_by_chain.setdefault(slot[0].chain, []).append(slot)
        per_chain = []
        for chain_id in sorted(world.chains):
            outs = self._chain_choices(base, chain_id, slots_by_chain.get(chain_id, []), reveals, live)
            if outs is not None:
                per_chain.append((chain_id, outs))
        now = world.now
        for picks in itertools.product(*[outs for _, outs in per_chain]):
            chains = dict(base.chains)
            public = base.public
            extra: dict[str, set] = {}
            injected = []
            positions = []
            orders = []
            for (chain_id, _), (inj, pos, perm, after, secrets, sigs, own) in zip(per_chain, picks):
                chains[chain_id] = after
                public = public.add(secrets, sigs)
                for addr, sig in own:
                    extra.setdefault(addr, set()).add(sig)
                injected.extend(inj)
                positions.extend(pos)
                if perm is not None:
                    orders.append((chain_id, perm))
            parties = base.parties
            if extra:
                parties = tuple(_with_signatures(p, extra.get(p.address)) for p in parties)
            child = replace(base, now=now + 1, chains=chains, public=public, parties=parties)
            yield child, ScheduleStep(now, tuple((tx.submitter, tx) for tx in injected), tuple(orders), tuple(positions))

    def _chain_choices(self, base: WorldState, chain_id: str, slots: list, reveals: dict,
                       live: set | None) -> list | None:
        """Distinct (injected, order, ledger, secrets, signatures, own signatures) outcomes for one chain."""
        ledger = base.chains[chain_id]
        if not slots and not ledger.pending:
            return None
        held = {p.address: p.private.signatures for p in base.parties}
        facts = {}
        for slot in slots:
            for tx in slot:
                novel = frozenset((tx.submitter, sig) for sig in tx.signatures()
                                  if sig.signer == tx.submitter and sig not in held[tx.submitter])
                # Locks a pure reveal still waits for; empty means it may go out on its own.
                waiting = reveals[tx] - live if tx in reveals and live is not None else frozenset()
                facts[tx] = (not gate_reason(base, tx), novel, waiting)
        # The same chain state recurs under many combinations of the other chains.
        key = (chain_id, base.now, ledger.key(), tuple(map(tuple, slots)), tuple(facts.values()))
        hit = self.choice_memo.get(key)
        if hit is None:
            hit = self.choice_memo[key] = self._enumerate_chain(ledger, base.now, slots, facts)
        return hit

    def _enumerate_chain(self, ledger, now: int, slots: list, facts: dict) -> list:
        total = 1
        for slot in slots:
            total *= len(slot) + 1
        if total > self.ecfg.max_action_sets:
            self.report.truncations.append(
                f"round {now} chain {ledger.chain_id}: {total} action sets capped at {self.ecfg.max_action_sets}")
        outcomes: dict = {}
        choices = itertools.islice(itertools.product(*[[None] + s for s in slots]), self.ecfg.max_action_sets)
        for combo in choices:
            chosen = tuple(tx for tx in combo if tx is not None)
            if any(facts[tx][2] and not _carried(facts[tx][2], tx, chosen) for tx in chosen):
                continue
            own = frozenset().union(*(facts[tx][1] for tx in chosen))
            sent = ledger
            for tx in chosen:
                if facts[tx][0]:
                    sent = sent.submit(tx, now)
            if not sent.pending:
                outcomes.setdefault((sent.key(), own), (chosen, (None,) * len(chosen), None, sent, (), (), own))
                continue
            memo_key = (ledger.chain_id, now + 1, sent.key())
            results = self.exec_memo.get(memo_key)
            if results is None:
                results = self._chain_outcomes(sent, now + 1)
                self.exec_memo[memo_key] = results
            due = sent.due(now + 1)
            for perm, after, secrets, sigs in results:
                key = (after.key(), frozenset(secrets), frozenset(sigs) - self.coalition_sigs, own)
                if key not in outcomes:
                    outcomes[key] = (chosen, _positions(chosen, due, perm), perm, after, secrets, sigs, own)
        return list(outcomes.values())

    def _chain_outcomes(self, ledger, now: int) -> list:
        """One (order, ledger) per distinct end state over all orderings of the due transactions.

        Every due transaction publishes its secrets and signatures whatever the order, so end states differ
        only in the ledger. Orders are searched as prefixes, merging prefixes that reach the same ledger
        with the same transactions left; this is exact and avoids walking all n! permutations.
        """
        due = ledger.due(now)
        secrets = [s for tx in due for s in tx.secrets()]
        sigs = [s for tx in due for s in tx.signatures()]
        later = tuple(p for p in ledger.pending if p[1] >= now)
        start = ChainLedger(ledger.chain_id, ledger.balances, ledger.contracts, later)
        outcomes: dict = {}
        seen: set = set()
        stack = [(start, (), tuple(range(len(due))))]
        while stack:
            cur, prefix, left = stack.pop()
            if not left:
                outcomes.setdefault(cur.key(), (prefix if len(due) > 1 else None, cur, secrets, sigs))
                continue
            mark = (cur.key(), left)
            if mark in seen:
                continue
            if len(seen) >= self.ecfg.max_order_states:
                self.report.truncations.append(
                    f"round {now} chain {ledger.chain_id}: ordering search capped at {self.ecfg.max_order_states}")
                break
            seen.add(mark)
            for i in reversed(left):
                nxt, _ = cur.apply(due[i], now)
                stack.append((nxt, prefix + (i,), tuple(j for j in left if j != i)))
        return sorted(outcomes.values(), key=lambda o: o[0] or ())


def _positions(chosen: Sequence[Transaction], due: Sequence[Transaction], perm: tuple | None) -> tuple:
    out = []
    for tx in chosen:
        if tx not in due:
            out.append(None)
            continue
        i = due.index(tx)
        out.append(perm.index(i) if perm is not None else i)
    return tuple(out)


def _carried(locks: frozenset, reveal: Transaction, chosen: Sequence[Transaction]) -> bool:
    return any(v in locks for tx in chosen if tx is not reveal for _, v in tx.args if isinstance(v, Hashlock))


def _with_signatures(party, sigs):
    if not sigs:
        return party
    private = party.private.add((), sigs)
    return party if private is party.private else replace(party, private=private)


def explore(cfg: ScenarioConfig, ecfg: ExploreConfig, properties: Sequence[Property], name: str = "") -> ExploreReport:
    if not properties:
        raise ConfigError("exploration needs at least one property")
    return _Search(cfg, ecfg, properties, name or cfg.name).run()


def replay_schedule(cfg: ScenarioConfig, ecfg: ExploreConfig, schedule: Sequence[ScheduleStep]) -> WorldState:
    """Rebuild the exploration path with full trace recording."""
    world = _recorded_prefix(cfg, ecfg)
    skip = frozenset(address_of(a) for a in ecfg.adversaries)
    for st in schedule:
        world = apply_step(world, skip, st)
    return world


def apply_step(world: WorldState, skip: frozenset, st: ScheduleStep, record: bool = True) -> WorldState:
    """One explored round: conforming parties submit first, then the injected calls in their chosen order."""
    if st.round != world.now:
        raise ConfigError(f"stale schedule: step for round {st.round} but world is at {world.now}")
    w, txs = collect(world, {}, skip)
    w = submit(w, txs, record)
    own: dict[str, set] = {}
    for _, tx in st.injected:
        own.setdefault(tx.submitter, set()).update(s for s in tx.signatures() if s.signer == tx.submitter)
    w = replace(w, parties=tuple(_with_signatures(p, own.get(p.address)) for p in w.parties))
    w = submit(w, [tx for _, tx in st.injected], record)
    w = replace(w, now=w.now + 1)
    try:
        return execute(w, orders=dict(st.orders), record=record)
    except ValueError as exc:
        raise ConfigError(f"stale schedule: {exc}") from None


def _scripted_prefix(cfg: ScenarioConfig, ecfg: ExploreConfig, record: bool = True) -> WorldState:
    """Everyone follows the scenario until the takeover; the adversaries pool knowledge only from then on."""
    world = build_world(cfg)
    while world.now < ecfg.explore_from:
        world = step(world, record=record)
    groups = (frozenset(address_of(a) for a in ecfg.adversaries),)
    return replace(world, coalitions=groups)


def _recorded_prefix(cfg: ScenarioConfig, ecfg: ExploreConfig) -> WorldState:
    world = _scripted_prefix(cfg, ecfg)
    seeded = prepare(cfg, ecfg)
    world = replace(world, parties=seeded.parties)
    return execute(world)


# -- presets --------------------------------------------------------------------

def no_underwater(name: str) -> Property:
    address = address_of(name)
    return Property(f"no-underwater:{name}", lambda init, w: not underwater(init, w, address))


def replacement_finalizes(seq: int = 0) -> Property:
    def check(init: WorldState, w: WorldState) -> bool:
        buyer = next(b for b in w.terms.buyers if b.seq == seq)
        return transfer_finalized(w, buyer)
    return Property("replacement-finalizes", check)


def ca_claimed_after_replace(seq: int = 0) -> Property:
    """If either swap ever names the buyer as leader, the leader ends up holding the buyer's payment."""
    def check(init: WorldState, w: WorldState) -> bool:
        buyer = next(b for b in w.terms.buyers if b.seq == seq)
        replaced = any(w.chains[ch].contract(cid).leader == buyer.address for ch, cid in (("A", "AB"), ("B", "BA")))
        ca = w.chains[buyer.chain].contract(buyer.contract_id)
        return not replaced or (ca is not None and ca.status == "claimed"
                                and w.chains[buyer.chain].balance_of(w.terms.leader, buyer.asset.kind) >= buyer.asset.quantity)
    return Property("ca-claimed-after-replace", check)


def conservation() -> Property:
    def check(init: WorldState, w: WorldState) -> bool:
        return all(init.chains[c].totals() == w.chains[c].totals() for c in init.chains)
    return Property("conservation", check, leaf_only=False)


LEADER_POOL = (
    ("Carol.C1", "Carol.C2", "Carol"),
    ("Carol.C1", "Alice.X1", "Carol"),
    ("Alice.X1", "Carol.C2", "Carol"),
)

EXPLORATIONS: dict[str, dict] = {
    "adversarial-alice-carol": {
        "description": "Alice and Carol deviate arbitrarily; conforming Bob must never end underwater",
        "scenario": "leader-transfer-all-conforming",
        "explore": ExploreConfig(adversaries=("Alice", "Carol"), leader_payloads=LEADER_POOL),
        "properties": lambda: [no_underwater("Bob"), conservation()],
    },
    "adversarial-bob": {
        "description": "Bob deviates arbitrarily; the replacement still finalizes",
        "scenario": "leader-transfer-all-conforming",
        "explore": ExploreConfig(adversaries=("Bob",), follower_payloads=(("Bob.X1", "Bob"),)),
        "properties": lambda: [replacement_finalizes(), no_underwater("Alice"), no_underwater("Carol"),
                               conservation()],
    },
    "adversarial-alice-bob": {
        "description": "Alice and Bob deviate together; conforming Carol must never end underwater",
        "scenario": "leader-transfer-all-conforming",
        # No follower payloads: a follower mutation only redirects Bob's own side and leaves CA untouched.
        "explore": ExploreConfig(adversaries=("Alice", "Bob"), scope=(("A", "AB"), ("B", "BA"), ("C", "CA")),
                                 leader_payloads=LEADER_POOL),
        "properties": lambda: [no_underwater("Carol"), conservation()],
    },
    "adversarial-alice-bob-vs-david": {
        "description": "Alice and Bob deviate together; conforming David must never end underwater",
        "scenario": "follower-transfer-all-conforming",
        # Follower vouchers only: adding leader vouchers multiplies the tree past the time bound on one core.
        "explore": ExploreConfig(adversaries=("Alice", "Bob"), scope=(("A", "AB"), ("B", "BA"), ("D", "DB")),
                                 follower_payloads=(("David.D1", "David"), ("Bob.X1", "David"))),
        "properties": lambda: [no_underwater("David"), conservation()],
    },
    "negative-contest-disabled": {
        "description": "Control: exploration (a) against a build without contestLeader; must find a witness",
        "scenario": "leader-transfer-all-conforming",
        "rules": {"contest_enabled": False},
        "explore": ExploreConfig(adversaries=("Alice", "Carol"), leader_payloads=LEADER_POOL),
        "properties": lambda: [no_underwater("Bob")],
        "expect_violation": True,
    },
    "negative-contest-window-1": {
        "description": "Control: staggered mutations with a 1-round contest window; must find a witness",
        "scenario": "leader-staggered-inconsistent",
        "rules": {"contest_window": 1},
        # Alice's scripted staggered mutations land at rounds 4 and 5; the adversaries take over after that.
        "explore": ExploreConfig(adversaries=("Alice", "Carol"), leader_payloads=LEADER_POOL, explore_from=5),
        "properties": lambda: [no_underwater("Bob")],
        "expect_violation": True,
    },
    "ca-timeout-probe": {
        "description": "Carol deviates under the 9-round buyer timeout; Alice must collect after any replace",
        "scenario": "leader-transfer-all-conforming",
        # Carol alone decides when C1 surfaces. Take over after her CA deploy has landed, since deploys are
        # not part of the alphabet.
        "explore": ExploreConfig(adversaries=("Carol",), scope=(("A", "AB"), ("B", "BA"), ("C", "CA")),
                                 explore_from=3),
        "properties": lambda: [ca_claimed_after_replace()],
    },
}


def preset_scenario(name: str) -> ScenarioConfig:
    """The scenario an exploration runs on, with any contract-rule overrides applied."""
    from .harness import load_scenario
    preset = EXPLORATIONS[name]
    cfg = load_scenario(preset["scenario"])
    return cfg.with_overrides(rules={**cfg.rules, **preset["rules"]}) if "rules" in preset else cfg


def preset_config(name: str, **overrides) -> ExploreConfig:
    return replace(EXPLORATIONS[name]["explore"], **overrides)


def run_exploration(name: str, cfg: ScenarioConfig | None = None, **overrides) -> ExploreReport:
    if name not in EXPLORATIONS:
        raise ConfigError(f"unknown exploration {name!r}")
    cfg = cfg or preset_scenario(name)
    return explore(cfg, preset_config(name, **overrides), EXPLORATIONS[name]["properties"](), name)


def library_calls_outside_alphabet(scenario: str, ecfg: ExploreConfig) -> list[tuple[int, Transaction]]:
    """Accepted calls a scripted adversary makes that the explorer's alphabet would not offer at that round.

    Empty means the scripted run is one of the explored paths, restricted to the scoped contracts and
    leaving out deployments, which the alphabet leaves to the scripted prefix.
    """
    from .chain import DEPLOY
    from .harness import load_scenario, run_scenario
    cfg = load_scenario(scenario)
    history = run_scenario(cfg).history
    adv = tuple(address_of(a) for a in ecfg.adversaries)
    pool = prepare(cfg, ecfg)
    extra = {p.address: p.private.signatures for p in pool.parties if p.address in adv}
    secrets = relevant_secrets(pool, ecfg)
    accepted = {(r["round"], r["submitter"], r["contract"], r["function"])
                for r in history[-1].trace if r["status"] == "accepted"}
    scope = set(ecfg.scope)
    missing = []
    for now in range(ecfg.explore_from, horizon_of(cfg, ecfg)):
        world = execute(history[now], record=False)
        decided = decisions(world)
        others = [tx for a, (txs, _) in decided.items() if a not in adv for tx in txs]
        view = replace(world, coalitions=(frozenset(adv),),
                       parties=tuple(_with_signatures(p, extra.get(p.address)) for p in world.parties))
        offered = {tx for slot in enabled_alphabet(view, adv, ecfg.scope, secrets, others,
                                                   defer_reveals=ecfg.defer_reveals) for tx in slot}
        for a in adv:
            for tx in decided.get(a, ([], None))[0]:
                if tx.target == DEPLOY or (tx.chain, tx.target) not in scope:
                    continue
                if (now + 1, a, tx.target, tx.function) not in accepted:
                    continue
                if tx not in offered:
                    missing.append((now, tx))
    return missing
