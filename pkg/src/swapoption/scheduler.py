"""Round-based world: execute what was submitted last round, publish, then let every party act."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Sequence

from .chain import ChainLedger, Transaction
from .core import KnowledgeSet, Secret
from .parties import Observation, Party, Terms, decide


@dataclass(frozen=True)
class OrderingPolicy:
    """How a chain orders the transactions that land in the same round.

    kind: "submission" (party order, then submission order), "reverse", or "seeded".
    """

    kind: str = "submission"
    seed: int = 0

    def order(self, chain_id: str, now: int, due: Sequence[Transaction]) -> list[int]:
        idx = list(range(len(due)))
        if self.kind == "submission":
            return idx
        if self.kind == "reverse":
            return idx[::-1]
        if self.kind == "seeded":
            random.Random(f"{self.seed}:{chain_id}:{now}").shuffle(idx)
            return idx
        raise ValueError(f"unknown ordering policy {self.kind!r}")


@dataclass(frozen=True)
class WorldState:
    now: int
    chains: dict
    parties: tuple
    public: KnowledgeSet = KnowledgeSet()
    terms: Terms | None = field(default=None, compare=False)
    coalitions: tuple = field(default=(), compare=False)
    trace: tuple = field(default=(), compare=False)
    # Transactions stopped by the knowledge gate; they never reach a chain.
    refused: tuple = field(default=(), compare=False)

    def key(self) -> tuple:
        """Hashable identity of the world, excluding the trace."""
        return (self.now, tuple(self.chains[c].key() for c in sorted(self.chains)), self.parties, self.public)

    def party(self, name_or_address: str) -> Party:
        for p in self.parties:
            if name_or_address in (p.name, p.address):
                return p
        raise KeyError(name_or_address)

    def coalition_of(self, address: str) -> frozenset:
        for group in self.coalitions:
            if address in group:
                return frozenset(group)
        return frozenset({address})

    def knowledge_of(self, address: str) -> KnowledgeSet:
        cache = self._knowledge
        if address not in cache:
            cache[address] = self._compute_knowledge(address)
        return cache[address]

    @cached_property
    def _knowledge(self) -> dict:
        return {}

    def _compute_knowledge(self, address: str) -> KnowledgeSet:
        known = self.public
        members = self.coalition_of(address)
        for p in self.parties:
            if p.address in members:
                known = known.union(p.private)
        return known

    def observe(self, address: str) -> Observation:
        return Observation(self.now, self.chains, self.knowledge_of(address), self.terms)


def gate_reason(world: WorldState, tx: Transaction) -> str:
    """Empty when the submitter may send tx; otherwise why the transaction is refused."""
    known = world.knowledge_of(tx.submitter)
    for s in tx.secrets():
        if not known.knows_secret(s):
            return "unknown secret"
    for sig in tx.signatures():
        if sig.signer != tx.submitter and sig not in known.signatures:
            return "unknown signature"
    return ""


def _record(now: int, tx: Transaction, status: str, reason: str, revealed: Sequence[Secret], state: str) -> dict:
    return {
        "round": now,
        "chain": tx.chain,
        "submitter": tx.submitter,
        "contract": tx.target,
        "function": tx.function,
        "status": status,
        "reject_reason": reason,
        "revealed_secrets": sorted(s.label for s in revealed),
        "state_digest": state,
    }


def execute(world: WorldState, policy: OrderingPolicy = OrderingPolicy(),
            orders: Mapping[str, Sequence[int]] | None = None, record: bool = True) -> WorldState:
    """Include every pending transaction due at world.now and publish what they reveal."""
    now = world.now
    chains = dict(world.chains)
    public = world.public
    trace = list(world.trace)
    for chain_id in sorted(chains):
        ledger: ChainLedger = chains[chain_id]
        due = ledger.due(now)
        if not due:
            continue
        order = (orders or {}).get(chain_id)
        if order is None:
            order = policy.order(chain_id, now, due)
        ledger, results = ledger.execute_round(now, order, digests=record)
        for tx, res, state in results:
            public = public.add(res.emitted, tx.signatures())
            if record:
                trace.append(_record(now, tx, res.status, res.reason, res.emitted, state))
        chains[chain_id] = ledger
    return replace(world, chains=chains, public=public, trace=tuple(trace))


def decisions(world: WorldState, skip: frozenset = frozenset()) -> dict:
    """Each non-skipped party's (transactions, memory) for this round."""
    return {p.address: decide(p, world.observe(p.address)) for p in world.parties
            if p.address not in skip and p.name not in skip}


def collect(world: WorldState, injected: Mapping[str, Sequence[Transaction]] | None = None,
            skip: frozenset = frozenset(), decided: Mapping | None = None) -> tuple[WorldState, list[Transaction]]:
    """Ask every party for this round's transactions. Parties in `skip` submit only what is injected."""
    parties = []
    txs: list[Transaction] = []
    injected = injected or {}
    decided = decisions(world, skip) if decided is None else decided
    for p in world.parties:
        own: list[Transaction] = []
        memory = p.memory
        if p.address in decided:
            own, memory = decided[p.address]
        own = own + list(injected.get(p.address, ())) + list(injected.get(p.name, ()))
        sigs = [s for tx in own for s in tx.signatures() if s.signer == p.address]
        private = p.private.add((), sigs)
        if memory != p.memory or private is not p.private:
            p = replace(p, memory=memory, private=private)
        parties.append(p)
        txs.extend(own)
    return replace(world, parties=tuple(parties)), txs


def submit(world: WorldState, txs: Sequence[Transaction], record: bool = True) -> WorldState:
    chains = dict(world.chains)
    refused = list(world.refused)
    for tx in txs:
        reason = gate_reason(world, tx) if tx.chain in chains else "unknown chain"
        if reason:
            refused.append((world.now, tx, reason))
            continue
        chains[tx.chain] = chains[tx.chain].submit(tx, world.now)
    return replace(world, chains=chains, refused=tuple(refused))


def step(world: WorldState, policy: OrderingPolicy = OrderingPolicy(),
         injected: Mapping[str, Sequence[Transaction]] | None = None,
         orders: Mapping[str, Sequence[int]] | None = None, skip: frozenset = frozenset(),
         record: bool = True) -> WorldState:
    """One full round: execute due transactions, parties observe and submit, clock advances."""
    world = execute(world, policy, orders, record)
    world, txs = collect(world, injected, skip)
    world = submit(world, txs, record)
    return replace(world, now=world.now + 1)


def run_until(world: WorldState, horizon: int, policy: OrderingPolicy = OrderingPolicy()) -> WorldState:
    """Step until the clock reads `horizon`; rounds before it have executed, `horizon` itself has not."""
    if horizon < world.now:
        raise ValueError(f"horizon {horizon} precedes now {world.now}")
    while world.now < horizon:
        world = step(world, policy)
    return world


def pending_count(world: WorldState) -> int:
    return sum(len(c.pending) for c in world.chains.values())

