"""Scenario loading, world construction, property checks and trace serialization."""

from __future__ import annotations

import io
import json
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import contracts as ct
from .chain import genesis
from .core import AssetAmount, KnowledgeSet, PartyId, hash_secret, make_secrets
from .parties import (CONFORMING, FOLLOWER_ESCROW, LEADER_ESCROW, STRATEGIES, BuyerTerms, FollowerBuyerTerms,
                      Party, Terms)
from .scheduler import OrderingPolicy, WorldState, step

SCHEMA = "swapoption.scenario/1"
FRESH_SECRETS_PER_PARTY = 2
# A leader transfer needs this many rounds between startLeader and T.
LEADER_TRANSFER_ROUNDS = 9
# A follower transfer must land its mutations two rounds before T.
FOLLOWER_TRANSFER_ROUNDS = 4


class ConfigError(ValueError):
    pass


@dataclass
class PartySpec:
    name: str
    strategy: str
    params: dict = field(default_factory=dict)


@dataclass
class BuyerSpec:
    name: str
    seq: int = 0
    start: int | None = None


@dataclass
class ScenarioConfig:
    name: str
    description: str = ""
    dT: int = 12
    start: int = 0
    start_leader: int | None = None
    start_follower: int | None = None
    ca_timeout: int = 9
    leader: str = "Alice"
    follower: str = "Bob"
    parties: list = field(default_factory=list)
    buyers: list = field(default_factory=list)
    follower_buyer: str | None = None
    assets: dict = field(default_factory=lambda: dict(DEFAULT_ASSETS))
    rules: dict = field(default_factory=dict)
    horizon: int | None = None
    seed: int = 0
    policy: dict = field(default_factory=lambda: {"kind": "submission"})

    @property
    def T(self) -> int:
        return self.start + self.dT

    @property
    def effective_horizon(self) -> int:
        return self.T + 2 if self.horizon is None else self.horizon

    def ordering(self) -> OrderingPolicy:
        return OrderingPolicy(self.policy.get("kind", "submission"), int(self.policy.get("seed", self.seed)))

    def contract_rules(self) -> ct.Rules:
        return ct.Rules(**self.rules)

    def to_dict(self) -> dict:
        out = {"schema": SCHEMA}
        out.update(asdict(self))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> ScenarioConfig:
        data = dict(data)
        schema = data.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ConfigError(f"unsupported scenario schema {schema!r}")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        if "name" not in data:
            raise ConfigError("scenario needs a name")
        try:
            data["parties"] = [p if isinstance(p, PartySpec) else PartySpec(**p) for p in data.get("parties", [])]
            data["buyers"] = [b if isinstance(b, BuyerSpec) else BuyerSpec(**b) for b in data.get("buyers", [])]
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg = cls(**data)
        validate(cfg)
        return cfg

    def with_overrides(self, **changes: Any) -> ScenarioConfig:
        cfg = replace(self, **{k: v for k, v in changes.items() if v is not None})
        validate(cfg)
        return cfg


DEFAULT_ASSETS = {
    "leader": ["florin", 100],
    "follower": ["guilder", 100],
    "buyer": ["payment", 40],
    "follower_buyer": ["payment", 30],
}


def validate(cfg: ScenarioConfig) -> None:
    if cfg.dT < ct.MIN_DT:
        raise ConfigError(f"dT={cfg.dT} is below the minimum of {ct.MIN_DT}")
    if cfg.ca_timeout not in (9, 10):
        raise ConfigError("ca_timeout must be 9 or 10")
    names = [p.name for p in cfg.parties]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate party names")
    for p in cfg.parties:
        if p.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {p.strategy!r} for {p.name}")
    referenced = [cfg.leader, cfg.follower] + [b.name for b in cfg.buyers]
    if cfg.follower_buyer:
        referenced.append(cfg.follower_buyer)
    for name in referenced:
        if name not in names:
            raise ConfigError(f"party {name!r} is referenced but not defined")
    if cfg.leader == cfg.follower:
        raise ConfigError("leader and follower must differ")
    multi = bool(cfg.rules.get("multi_candidate"))
    try:
        cfg.contract_rules()
    except TypeError:
        raise ConfigError(f"unknown rule switches in {cfg.rules}") from None
    if cfg.buyers and not multi and len(cfg.buyers) > 1:
        raise ConfigError("several buyers need multi_candidate rules")
    if sorted(b.seq for b in cfg.buyers) != list(range(len(cfg.buyers))):
        raise ConfigError("buyer seq numbers must be 0..n-1")
    if cfg.buyers and cfg.start_leader is None:
        raise ConfigError("buyers configured without start_leader")
    for b in cfg.buyers:
        s = buyer_start(cfg, b)
        if s > cfg.T - LEADER_TRANSFER_ROUNDS:
            raise ConfigError(f"buyer {b.name} starts at {s}, later than T-9={cfg.T - LEADER_TRANSFER_ROUNDS}")
    if cfg.follower_buyer:
        if cfg.start_follower is None:
            raise ConfigError("follower_buyer configured without start_follower")
        if cfg.start_follower > cfg.T - FOLLOWER_TRANSFER_ROUNDS:
            raise ConfigError(f"start_follower must be at most T-{FOLLOWER_TRANSFER_ROUNDS}")
    if cfg.policy.get("kind", "submission") not in ("submission", "reverse", "seeded"):
        raise ConfigError(f"unknown ordering policy {cfg.policy.get('kind')!r}")
    if cfg.effective_horizon < cfg.start:
        raise ConfigError("horizon precedes start")


def buyer_start(cfg: ScenarioConfig, b: BuyerSpec) -> int:
    # Later tickets arrive one ticket spacing plus one round apart by default.
    return b.start if b.start is not None else cfg.start_leader + (ct.NEXT_TICKET_AFTER + 1) * b.seq


def load_scenario(source: str | Path | dict) -> ScenarioConfig:
    if isinstance(source, dict):
        return ScenarioConfig.from_dict(source)
    if isinstance(source, str) and source in BUILTIN_SCENARIOS:
        return ScenarioConfig.from_dict(BUILTIN_SCENARIOS[source])
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"no built-in scenario or file named {source!r}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ScenarioConfig.from_dict(data)


# -- world construction ---------------------------------------------------------

def address_of(name: str) -> str:
    return name.lower()


def secret_labels(cfg: ScenarioConfig) -> list[str]:
    labels = [f"{cfg.leader}.A1"]
    for b in sorted(cfg.buyers, key=lambda b: b.seq):
        labels += [f"{b.name}.C1", f"{b.name}.C2"]
    if cfg.follower_buyer:
        labels.append(f"{cfg.follower_buyer}.D1")
    for p in cfg.parties:
        labels += [f"{p.name}.X{i + 1}" for i in range(FRESH_SECRETS_PER_PARTY)]
    return labels


def _asset(cfg: ScenarioConfig, role: str) -> AssetAmount:
    kind, qty = cfg.assets[role]
    return AssetAmount(kind, int(qty))


def build_terms(cfg: ScenarioConfig, secrets: dict) -> Terms:
    multi = bool(cfg.rules.get("multi_candidate"))
    buyers = []
    for b in sorted(cfg.buyers, key=lambda b: b.seq):
        s = buyer_start(cfg, b)
        chain, cid = ("C", f"CA{b.seq}") if multi else ("C", "CA")
        buyers.append(BuyerTerms(
            name=b.name, address=address_of(b.name), seq=b.seq, start=s,
            replace_hashlock=hash_secret(secrets[f"{b.name}.C1"]),
            swap_hashlock=hash_secret(secrets[f"{b.name}.C2"]),
            asset=_asset(cfg, "buyer"), timeout=s + cfg.ca_timeout, chain=chain, contract_id=cid))
    fb = None
    if cfg.follower_buyer:
        fb = FollowerBuyerTerms(
            name=cfg.follower_buyer, address=address_of(cfg.follower_buyer), start=cfg.start_follower,
            replace_hashlock=hash_secret(secrets[f"{cfg.follower_buyer}.D1"]),
            asset=_asset(cfg, "follower_buyer"), timeout=cfg.start_follower + 5)
    return Terms(
        leader=address_of(cfg.leader), follower=address_of(cfg.follower), start=cfg.start, dT=cfg.dT,
        leader_asset=_asset(cfg, "leader"), follower_asset=_asset(cfg, "follower"),
        swap_hashlock=hash_secret(secrets[f"{cfg.leader}.A1"]), buyers=tuple(buyers), follower_buyer=fb,
        rules=cfg.contract_rules())


def build_world(cfg: ScenarioConfig, coalitions: Sequence[Iterable[str]] = ()) -> WorldState:
    validate(cfg)
    secrets = make_secrets(cfg.seed, secret_labels(cfg))
    terms = build_terms(cfg, secrets)
    chain_a = genesis("A", [(terms.leader, terms.leader_asset.kind, terms.leader_asset.quantity)])
    chain_b = genesis("B", [(terms.follower, terms.follower_asset.kind, terms.follower_asset.quantity)])
    chain_c = genesis("C", [(b.address, b.asset.kind, b.asset.quantity) for b in terms.buyers])
    fb = terms.follower_buyer
    chain_d = genesis("D", [(fb.address, fb.asset.kind, fb.asset.quantity)] if fb else [])
    parties = []
    for p in cfg.parties:
        own = [s for label, s in secrets.items() if label.split(".")[0] == p.name]
        parties.append(Party(PartyId(p.name, address_of(p.name)), p.strategy, dict(p.params),
                             KnowledgeSet(frozenset(own))))
    groups = tuple(frozenset(address_of(n) for n in g) for g in coalitions)
    return WorldState(now=0, chains={"A": chain_a, "B": chain_b, "C": chain_c, "D": chain_d},
                      parties=tuple(parties), terms=terms, coalitions=groups)


@dataclass
class RunResult:
    config: ScenarioConfig
    history: list  # history[0] is the initial world; history[i] follows round i-1

    @property
    def initial(self) -> WorldState:
        return self.history[0]

    @property
    def final(self) -> WorldState:
        return self.history[-1]

    @property
    def trace(self) -> tuple:
        return self.final.trace


def run_scenario(cfg: ScenarioConfig, policy: OrderingPolicy | None = None) -> RunResult:
    world = build_world(cfg)
    policy = policy or cfg.ordering()
    history = [world]
    while world.now <= cfg.effective_horizon:
        world = step(world, policy)
        history.append(world)
    return RunResult(cfg, history)


# -- trace helpers --------------------------------------------------------------

def records(trace: Iterable[dict], **match: Any) -> list[dict]:
    return [r for r in trace if all(r.get(k) == v for k, v in match.items())]


def first_round(trace: Iterable[dict], **match: Any) -> int | None:
    found = records(trace, **match)
    return min(r["round"] for r in found) if found else None


def emit_trace(trace: Iterable[dict], sink: str | Path | io.TextIOBase) -> None:
    lines = "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in trace)
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(lines)
    else:
        sink.write(lines)


def trace_text(trace: Iterable[dict]) -> str:
    buf = io.StringIO()
    emit_trace(trace, buf)
    return buf.getvalue()


def read_trace(source: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(source).read_text().splitlines() if line.strip()]


def golden_path(name: str) -> Path:
    return Path(str(resources.files("swapoption") / "golden" / f"{name}.jsonl"))


def compare_traces(actual: Sequence[dict], expected: Sequence[dict]) -> str:
    """Empty when identical, else a description of the first difference."""
    for i, (a, e) in enumerate(zip(actual, expected)):
        if a != e:
            return f"record {i} differs: got {a} expected {e}"
    if len(actual) != len(expected):
        return f"length differs: got {len(actual)} records, expected {len(expected)}"
    return ""


# -- properties -----------------------------------------------------------------

@dataclass(frozen=True)
class PropertyReport:
    property_id: str
    holds: bool
    witness: tuple = ()
    detail: str = ""

    def line(self) -> str:
        return f"{'HOLDS' if self.holds else 'VIOLATED'} {self.property_id}" + (f": {self.detail}" if self.detail else "")


def holdings(world: WorldState, address: str) -> Counter:
    """Free balances plus every live escrow the party would get back on refund."""
    out: Counter = Counter()
    for ledger in world.chains.values():
        for (owner, kind), qty in ledger.balances.items():
            if owner == address:
                out[kind] += qty
        for c in ledger.contracts.values():
            if c.status == "active" and c.sender == address:
                out[c.asset.kind] += c.asset.quantity
    return out


def underwater(initial: WorldState, final: WorldState, address: str) -> bool:
    before, after = holdings(initial, address), holdings(final, address)
    kinds = set(before) | set(after)
    lost = any(after[k] < before[k] for k in kinds)
    gained = any(after[k] > before[k] for k in kinds)
    return lost and not gained


def _party_for(world: WorldState, name: str) -> Party:
    try:
        return world.party(name)
    except KeyError:
        raise ConfigError(f"no party named {name!r}") from None


def check_no_underwater(result: RunResult, name: str) -> PropertyReport:
    p = _party_for(result.initial, name)
    if p.strategy not in CONFORMING:
        raise ConfigError(f"{name} is not conforming in {result.config.name}")
    bad = underwater(result.initial, result.final, p.address)
    witness = tuple(r for r in result.trace if r["status"] == "accepted" and r["function"] in ("claim", "refund"))
    detail = f"{dict(holdings(result.initial, p.address))} -> {dict(holdings(result.final, p.address))}"
    return PropertyReport(f"no-underwater:{name}", not bad, witness if bad else (), detail)


def transfer_finalized(world: WorldState, buyer: BuyerTerms) -> bool:
    ab, ba = world.chains["A"].contract(LEADER_ESCROW[1]), world.chains["B"].contract(FOLLOWER_ESCROW[1])
    ca = world.chains[buyer.chain].contract(buyer.contract_id)
    return (ab is not None and ba is not None and ca is not None
            and ab.leader == buyer.address and ab.sender == buyer.address and ab.swap_hashlock == buyer.swap_hashlock
            and ba.leader == buyer.address and ba.receiver == buyer.address and ba.swap_hashlock == buyer.swap_hashlock
            and ca.status == "claimed")


def finalization_round(result: RunResult, seq: int = 0) -> int | None:
    buyer = _buyer(result, seq)
    for i, w in enumerate(result.history[1:]):
        if transfer_finalized(w, buyer):
            return i
    return None


def _buyer(result: RunResult, seq: int) -> BuyerTerms:
    terms = result.initial.terms
    b = next((b for b in terms.buyers if b.seq == seq), None)
    if b is None:
        raise ConfigError(f"no buyer with seq {seq} in {result.config.name}")
    return b


def check_liveness(result: RunResult, seq: int = 0) -> PropertyReport:
    b = _buyer(result, seq)
    r = finalization_round(result, seq)
    leader = result.initial.terms.leader
    paid = result.final.chains[b.chain].balance_of(leader, b.asset.kind) >= b.asset.quantity
    holds = r is not None and paid
    return PropertyReport("liveness", holds, () if holds else tuple(result.trace),
                          f"finalized at round {r}" if r is not None else "never finalized")


def check_transfer_atomicity(result: RunResult) -> PropertyReport:
    """Any accepted replace means that buyer's payment reached the leader before its timeout."""
    terms = result.initial.terms
    bad = []
    for b in terms.buyers:
        if not _replaced_by(result, b):
            continue
        ca_claims = records(result.trace, chain=b.chain, contract=b.contract_id, function="claim", status="accepted",
                            submitter=terms.leader)
        if not ca_claims or ca_claims[0]["round"] > b.timeout:
            bad.append(b.name)
    return PropertyReport("transfer-atomicity", not bad, tuple(records(result.trace, function="replaceLeader")),
                          f"unpaid replacements: {bad}" if bad else "")


def _replaced_by(result: RunResult, b: BuyerTerms) -> bool:
    return any(w.chains[ch].contract(cid) is not None and w.chains[ch].contract(cid).leader == b.address
               for w in result.history for ch, cid in (LEADER_ESCROW, FOLLOWER_ESCROW))


def accepted_replace_seqs(result: RunResult) -> list[int]:
    """Seq of the new leader after each accepted replaceLeader, in trace order."""
    by_address = {b.address: b.seq for b in result.initial.terms.buyers}
    out = []
    for rec in records(result.trace, function="replaceLeader", status="accepted"):
        after = result.history[rec["round"] + 1]
        chain = rec["chain"]
        c = after.chains[chain].contract(rec["contract"])
        out.append(by_address[c.leader])
    return out


def check_fcfs(result: RunResult) -> PropertyReport:
    seqs = accepted_replace_seqs(result)
    ascending = all(a <= b for a, b in zip(seqs, seqs[1:]))
    conforming = sorted(b.seq for b in result.initial.terms.buyers
                        if result.initial.party(b.address).strategy in CONFORMING)
    winner_ok = not seqs or not conforming or seqs[0] == conforming[0]
    holds = ascending and winner_ok
    return PropertyReport("fcfs", holds, (), f"accepted replace seqs {seqs}, conforming buyers {conforming}")


def check_starvation_freedom(result: RunResult, seq: int) -> PropertyReport:
    r = finalization_round(result, seq)
    return PropertyReport("starvation-freedom", r is not None, (), f"buyer {seq} finalized at {r}")


def check_counter_sync(result: RunResult) -> PropertyReport:
    desync_rounds = []
    worst = 0
    for i, w in enumerate(result.history[1:]):
        ab, ba = w.chains["A"].contract("AB"), w.chains["B"].contract("BA")
        if ab is None or ba is None:
            continue
        gap = abs(ab.counter - ba.counter)
        worst = max(worst, gap)
        if gap:
            desync_rounds.append(i)
    lasting = [r for r in desync_rounds if r + 1 in desync_rounds]
    holds = worst <= 1 and not lasting
    return PropertyReport("counter-sync", holds, (), f"max gap {worst}, desynced rounds {desync_rounds}")


def check_ticket_spacing(result: RunResult) -> PropertyReport:
    """Successive leader tickets on one contract start more than the ticket spacing apart."""
    leader = result.initial.terms.leader
    gaps = []
    for chain, cid in (LEADER_ESCROW, FOLLOWER_ESCROW):
        rounds = [r["round"] for r in records(result.trace, chain=chain, contract=cid, function="mutateLockLeader",
                                              status="accepted", submitter=leader)]
        gaps += [b - a for a, b in zip(rounds, rounds[1:])]
    holds = all(g > ct.NEXT_TICKET_AFTER for g in gaps)
    return PropertyReport("ticket-spacing", holds, (), f"gaps {gaps}")


def check_conservation(result: RunResult) -> PropertyReport:
    base = {cid: ledger.totals() for cid, ledger in result.initial.chains.items()}
    for i, w in enumerate(result.history):
        now = {cid: ledger.totals() for cid, ledger in w.chains.items()}
        if now != base:
            return PropertyReport("conservation", False, (), f"totals changed after round {i - 1}: {now}")
    return PropertyReport("conservation", True)


def check_state_transitions(result: RunResult) -> PropertyReport:
    """Every per-round change of a swap's named state follows the allowed transition graph.

    Single-candidate only: a promoted ticket may legitimately re-enter the contestable state.
    """
    if result.initial.terms.rules.multi_candidate:
        return PropertyReport("state-transitions", True, (), "not applicable to multi-candidate rules")
    for (chain, cid) in (LEADER_ESCROW, FOLLOWER_ESCROW):
        prev = None
        for i, w in enumerate(result.history[1:]):
            c = w.chains[chain].contract(cid)
            if c is None:
                continue
            name = ct.state_name(c, i)
            # One edge per accepted call plus one for the passage of time.
            hops = 1 + len(records(result.trace, round=i, chain=chain, contract=cid, status="accepted"))
            if prev is not None and name not in _reachable(prev, hops):
                return PropertyReport("state-transitions", False, (), f"{cid}: {prev} -> {name} at round {i}")
            prev = name
    return PropertyReport("state-transitions", True)


def _reachable(state: str, hops: int) -> set[str]:
    seen = {state}
    for _ in range(hops):
        seen |= {b for a, b in ct.STATE_EDGES if a in seen}
    return seen


def check_transfer_independence(cfg: ScenarioConfig) -> PropertyReport:
    """Rerun with the follower silent after setup: the transfer must still finalize."""
    parties = [PartySpec(p.name, "silent", {"setup": True}) if p.name == cfg.follower else p for p in cfg.parties]
    rerun = run_scenario(replace(cfg, parties=parties, name=cfg.name + "+silent-follower"))
    live = check_liveness(rerun)
    return PropertyReport("transfer-independence", live.holds, live.witness, live.detail)


def check_altruistic_speedup(plain: RunResult, altruistic: RunResult) -> PropertyReport:
    a, p = finalization_round(altruistic), finalization_round(plain)
    holds = a is not None and p is not None and a < p
    return PropertyReport("altruistic-speedup", holds, (), f"altruistic {a} vs plain {p}")


# -- built-in scenarios -----------------------------------------------------------

def _scenario(name: str, description: str, parties: list, **kw: Any) -> dict:
    return {"schema": SCHEMA, "name": name, "description": description, "parties": parties, **kw}


def _p(name: str, strategy: str, **params: Any) -> dict:
    return {"name": name, "strategy": strategy, "params": params}


ALICE = _p("Alice", "conformingAliceLeaderSeller")
BOB = _p("Bob", "conformingBobFollower")
CAROL = _p("Carol", "conformingCarolBuyer")
ONE_BUYER = {"start_leader": 2, "buyers": [{"name": "Carol", "seq": 0}]}


def _leader(name: str, description: str, alice=ALICE, bob=BOB, carol=CAROL, **kw: Any) -> dict:
    return _scenario(name, description, [alice, bob, carol], **{**ONE_BUYER, **kw})


BUILTIN_SCENARIOS: dict[str, dict] = {s["name"]: s for s in [
    _scenario("setup-only", "Alice and Bob escrow; Alice exercises at round 6", [
        _p("Alice", "conformingAliceLeaderSeller", exercise_at=6), BOB]),
    _scenario("setup-expiry", "Alice and Bob escrow and nobody exercises; both refund", [ALICE, BOB]),
    _leader("leader-transfer-all-conforming", "Alice sells her leader position to Carol; everyone conforms"),
    _leader("leader-transfer-altruistic", "Leader transfer with Bob approving consistent mutations",
            bob=_p("Bob", "altruisticBobFollower")),
    _leader("leader-transfer-silent-bob", "Leader transfer while Bob does nothing after setup",
            bob=_p("Bob", "silent", setup=True)),
    _leader("leader-inconsistent-hashlocks", "Alice reports different swap hashlocks on the two contracts",
            alice=_p("Alice", "inconsistentHashlocks")),
    _leader("leader-mutate-one-contract-only", "Alice mutates AB only; Bob relays the voucher to BA",
            alice=_p("Alice", "mutateOneContractOnly")),
    _leader("leader-claim-ba-then-mutate-ab", "Alice exercises on BA and mutates AB in the same round",
            alice=_p("Alice", "claimBAThenMutateAB")),
    _leader("leader-griefing-carol", "Carol never releases her secret; Alice exercises after the implicit revert",
            alice=_p("Alice", "conformingAliceLeaderSeller", after_failed="exercise"),
            carol=_p("Carol", "griefingCarol")),
    _leader("leader-replace-one-contract-only", "Carol replaces BA only; Bob forwards her secret to AB",
            carol=_p("Carol", "replaceOneContractOnly", which="BA")),
    _leader("leader-staggered-consistent", "Alice mutates AB and BA one round apart with the same payload",
            alice=_p("Alice", "staggeredConsistentMutations")),
    _leader("leader-staggered-inconsistent", "Alice mutates AB, then BA a round later with a different swap hashlock",
            alice=_p("Alice", "staggeredConsistentMutations", inconsistent=True)),
    _scenario("follower-transfer-all-conforming", "Bob sells his follower position to David", [
        ALICE, _p("Bob", "conformingBobSeller"), _p("David", "conformingDavidBuyer")],
        start_follower=2, follower_buyer="David"),
    _scenario("concurrent-leader-follower", "Leader and follower transfers run at the same time", [
        ALICE, _p("Bob", "conformingBobSeller"), CAROL, _p("David", "conformingDavidBuyer")],
        start_follower=2, follower_buyer="David", **ONE_BUYER),
    _scenario("multi-candidate-conforming", "Three buyers hold tickets 0..2; the first completes", [
        ALICE, BOB, _p("Carol", "conformingCarolBuyer"), _p("Carol1", "conformingCarolBuyer"),
        _p("Carol2", "conformingCarolBuyer")],
        dT=24, start_leader=2, buyers=[{"name": "Carol", "seq": 0}, {"name": "Carol1", "seq": 1},
                                       {"name": "Carol2", "seq": 2}],
        rules={"multi_candidate": True}),
    _scenario("multi-candidate-starvation", "Buyers 0 and 1 give up; buyer 2 still gets the position", [
        ALICE, BOB, _p("Carol", "griefingCarol"), _p("Carol1", "griefingCarol"),
        _p("Carol2", "conformingCarolBuyer")],
        dT=24, start_leader=2, buyers=[{"name": "Carol", "seq": 0}, {"name": "Carol1", "seq": 1},
                                       {"name": "Carol2", "seq": 2}],
        rules={"multi_candidate": True}),
    _scenario("multi-candidate-one-sided", "Alice mutates AB only and Bob relays; counters move a round apart", [
        _p("Alice", "mutateOneContractOnly"), BOB, _p("Carol", "griefingCarol"), _p("Carol1", "griefingCarol"),
        _p("Carol2", "conformingCarolBuyer")],
        dT=24, start_leader=2, buyers=[{"name": "Carol", "seq": 0}, {"name": "Carol1", "seq": 1},
                                       {"name": "Carol2", "seq": 2}],
        rules={"multi_candidate": True}),
    _scenario("multi-candidate-duplicate-seq", "Alice hands ticket 0 to two buyers, one per contract", [
        _p("Alice", "duplicateSeqAssignment"), BOB, _p("Carol", "conformingCarolBuyer"),
        _p("Carol1", "conformingCarolBuyer")],
        dT=24, start_leader=2, buyers=[{"name": "Carol", "seq": 0}, {"name": "Carol1", "seq": 1, "start": 2}],
        rules={"multi_candidate": True}),
]}

GOLDEN_SCENARIO = "leader-transfer-all-conforming"


def run_reports(result: RunResult) -> list[PropertyReport]:
    """The property reports that apply to the scenario's role configuration."""
    reports = [check_conservation(result), check_state_transitions(result)]
    for p in result.initial.parties:
        if p.strategy in CONFORMING:
            reports.append(check_no_underwater(result, p.name))
    terms = result.initial.terms
    conforming = {p.address for p in result.initial.parties if p.strategy in CONFORMING}
    if terms.buyers:
        reports.append(check_transfer_atomicity(result))
        first = min(terms.buyers, key=lambda b: b.seq)
        if len(terms.buyers) == 1 and conforming >= {terms.leader, first.address}:
            reports.append(check_liveness(result, first.seq))
    if terms.rules.multi_candidate:
        reports += [check_counter_sync(result), check_fcfs(result), check_ticket_spacing(result)]
    return reports


# -- optionality sweep ---------------------------------------------------------

FOLLOWER_MUTATION_STATES = ("inactive", "active", "expired")


def _with_follower_state(ba: ct.MutSwapContract, state: str, now: int, buyer: FollowerBuyerTerms,
                         voucher) -> ct.MutSwapContract:
    if state == "inactive":
        return ba
    start = now - 1 if state == "active" else now - ct.FOLLOWER_REPLACE_WINDOW - 1
    fm = ct.FollowerMutation(voucher=voucher, candidate=buyer.address, replace_hashlock=buyer.replace_hashlock,
                             start_time=start, mutating=True, locks_asset=ba.follower_mutation.locks_asset)
    return replace(ba, follower_mutation=fm)


def optionality_sweep(name: str = "follower-transfer-all-conforming") -> list[tuple[int, str, str]]:
    """Execute the leader's exercise on BA at every round from startFollower to T, once per
    follower-mutation state. Returns (round, state, status or reject reason)."""
    from .chain import make_tx
    from .core import sign
    cfg = load_scenario(name)
    world = build_world(cfg)
    policy = cfg.ordering()
    # Advance only until BA exists, so nobody has exercised or mutated yet.
    while "BA" not in world.chains["B"].contracts:
        world = step(world, policy)
    terms = world.terms
    buyer = terms.follower_buyer
    secret = world.party(terms.leader).private.preimage_of(terms.swap_hashlock)
    voucher = sign(terms.follower, (buyer.replace_hashlock, buyer.address))
    ledger = replace(world.chains["B"], pending=())
    base = ledger.contracts["BA"]
    tx = make_tx(terms.leader, "B", "BA", "claim", secret=secret)
    out = []
    for now in range(cfg.start_follower, base.timeout + 1):
        for state in FOLLOWER_MUTATION_STATES:
            contracts = {**ledger.contracts, "BA": _with_follower_state(base, state, now, buyer, voucher)}
            _, res = replace(ledger, contracts=contracts).apply(tx, now)
            out.append((now, state, res.status if res.status == "accepted" else res.reason))
    return out


def check_optionality_preserving(name: str = "follower-transfer-all-conforming") -> PropertyReport:
    rows = optionality_sweep(name)
    bad = [r for r in rows if r[2] != "accepted"]
    return PropertyReport("optionality-preserving", not bad, tuple(bad),
                          f"{len(rows) - len(bad)}/{len(rows)} exercises accepted")


# Library follower deviations that still complete setup; without BA there is no position to transfer.
DEVIATING_FOLLOWERS = (("silent", {"setup": True}),)


def check_non_blocking(cfg: ScenarioConfig, exhaustive: bool = True) -> PropertyReport:
    """The replacement finalizes whatever the follower does: every library deviation, then every explored schedule."""
    failed = []
    for strategy, params in DEVIATING_FOLLOWERS:
        parties = [PartySpec(p.name, strategy, params) if p.name == cfg.follower else p for p in cfg.parties]
        rerun = run_scenario(replace(cfg, parties=parties, name=f"{cfg.name}+{strategy}"))
        if not check_liveness(rerun).holds:
            failed.append(f"{strategy}{params or ''}")
    detail = f"{len(DEVIATING_FOLLOWERS)} library strategies"
    if exhaustive:
        from .explorer import run_exploration
        report = run_exploration("adversarial-bob", cfg)
        failed += [f"schedule violating {v.property_id}" for v in report.violations]
        failed += report.truncations
        detail += f", {report.states_visited} explored states"
    return PropertyReport("non-blocking", not failed, tuple(failed), detail)
