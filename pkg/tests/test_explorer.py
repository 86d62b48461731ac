import inspect
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from swapoption import contracts as ct
from swapoption.chain import make_tx
from swapoption.core import Hashlock, hash_secret
from swapoption.explorer import (EXPLORATIONS, ExploreConfig, ScheduleStep, _Search, apply_step, enabled_alphabet,
                                 explore, library_calls_outside_alphabet, no_underwater, preset_config,
                                 preset_scenario, replay_schedule, run_exploration, schedule_record)
from swapoption.harness import ConfigError, address_of, load_scenario, run_scenario, trace_text
from swapoption.scheduler import decisions, execute


def search(name, **overrides):
    cfg = preset_scenario(name)
    s = _Search(cfg, preset_config(name, **overrides), EXPLORATIONS[name]["properties"](), name)
    return s, s.start()


def random_walk(s, root, rng):
    w, sched = root, ()
    while w.now < s.horizon:
        kids = list(s.children(w))
        w, step = rng.choice(kids)
        sched += (step,)
    return w, sched


# -- replay ---------------------------------------------------------------------

@settings(max_examples=8, deadline=None)
@given(st.sampled_from(["adversarial-bob", "adversarial-alice-carol", "adversarial-alice-bob-vs-david"]),
       st.integers(0, 10_000))
def test_replay_reproduces_search_path(name, seed):
    s, root = search(name)
    w, sched = random_walk(s, root, random.Random(seed))
    replayed = replay_schedule(s.cfg, s.ecfg, sched)
    assert replayed.key() == w.key()
    # Dedup only prunes the search; a schedule means the same thing either way.
    again = replay_schedule(s.cfg, replace(s.ecfg, dedup=False), sched)
    assert trace_text(again.trace) == trace_text(replayed.trace)


def conforming_schedule(name):
    """The schedule under which the explorer's adversaries do exactly what their scripted strategy does."""
    cfg = preset_scenario(name)
    ecfg = preset_config(name)
    history = run_scenario(cfg).history
    adv = {address_of(a) for a in ecfg.adversaries}
    steps = []
    for now in range(ecfg.explore_from, cfg.T + 2):
        decided = decisions(execute(history[now], record=False))
        natural = [tx for p in history[now].parties for tx in decided[p.address][0]]
        replayed = [tx for tx in natural if tx.submitter not in adv] + [tx for tx in natural if tx.submitter in adv]
        orders = []
        for chain in sorted({tx.chain for tx in natural}):
            mine = [tx for tx in replayed if tx.chain == chain]
            orders.append((chain, tuple(mine.index(tx) for tx in natural if tx.chain == chain)))
        steps.append(ScheduleStep(now, tuple((tx.submitter, tx) for tx in natural if tx.submitter in adv),
                                  tuple(o for o in orders if len(o[1]) > 1)))
    return cfg, ecfg, steps


@pytest.mark.parametrize("name", ["adversarial-alice-carol", "adversarial-bob"])
def test_replay_of_conforming_path_equals_direct_run(name):
    cfg, ecfg, steps = conforming_schedule(name)
    assert trace_text(replay_schedule(cfg, ecfg, steps).trace) == trace_text(run_scenario(cfg).trace)


def test_stale_schedule_rejected():
    cfg, ecfg, steps = conforming_schedule("adversarial-alice-carol")
    with pytest.raises(ConfigError, match="stale"):
        replay_schedule(cfg, ecfg, steps[1:])
    with pytest.raises(ConfigError, match="stale"):
        # An ordering must permute exactly the transactions due on its chain.
        landed = next(r for r in run_scenario(cfg).trace if r["round"] > ecfg.explore_from + 1)
        i = landed["round"] - 1 - ecfg.explore_from
        bad = replace(steps[i], orders=((landed["chain"], tuple(range(9))),))
        replay_schedule(cfg, ecfg, steps[:i] + [bad])


def test_witness_replays_to_violation_deterministically():
    report = run_exploration("negative-contest-window-1")
    assert report.violations
    cfg = preset_scenario("negative-contest-window-1")
    ecfg = preset_config("negative-contest-window-1")
    sched = report.violations[0].schedule
    a, b = replay_schedule(cfg, ecfg, sched), replay_schedule(cfg, ecfg, sched)
    assert trace_text(a.trace) == trace_text(b.trace)
    prop = no_underwater("Bob")
    # Replay runs to the end of the witness; the property is judged at the horizon.
    assert a.now == cfg.T + 2 and not prop.check(run_scenario(cfg).initial, a)
    records = schedule_record(sched)
    assert all("position" in r for r in records if "function" in r)


# -- search -------------------------------------------------------------------------

def test_report_is_deterministic():
    assert run_exploration("adversarial-bob").to_dict() == run_exploration("adversarial-bob").to_dict()


def test_dedup_prunes_without_changing_the_verdict():
    # A short horizon cuts runs before settlement, so some properties fail; both searches must agree on which.
    on = run_exploration("adversarial-bob", horizon=6)
    off = run_exploration("adversarial-bob", horizon=6, dedup=False)
    assert not off.truncations
    assert {v.property_id for v in on.violations} == {v.property_id for v in off.violations}
    assert off.states_visited > on.states_visited and off.dedup_hits == 0


def test_config_errors():
    cfg = preset_scenario("adversarial-bob")
    with pytest.raises(ConfigError):
        explore(cfg, ExploreConfig(adversaries=("Bob",), horizon=cfg.T + 3), [no_underwater("Alice")])
    with pytest.raises(ConfigError):
        explore(cfg, ExploreConfig(adversaries=("Bob",)), [])
    with pytest.raises(ConfigError):
        explore(cfg, ExploreConfig(adversaries=("Zed",)), [no_underwater("Alice")])


def test_caps_are_reported_not_silent():
    report = run_exploration("adversarial-bob", max_action_sets=2)
    assert report.truncations and "capped" in report.truncations[0]


class _Recording(_Search):
    """Keeps (first world, later world) pairs that the dedup set treated as one state."""

    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self.first: dict = {}
        self.pairs: list = []

    def _visit(self, world, schedule):
        key = self._key(world)
        if key in self.first and len(self.pairs) < 40 and self.first[key].key() != world.key():
            self.pairs.append((self.first[key], world))
        self.first.setdefault(key, world)
        super()._visit(world, schedule)


def test_dedup_is_sound():
    """Worlds merged by dedup stay merged under every identical extension."""
    name = "adversarial-alice-carol"
    cfg = preset_scenario(name)
    s = _Recording(cfg, preset_config(name, horizon=9), EXPLORATIONS[name]["properties"](), name)
    s.run()
    assert s.pairs, "expected merged pairs that differ outside the search key"
    rng = random.Random(4)
    for a, b in s.pairs:
        while a.now < s.horizon:
            a, step = rng.choice(list(s.children(a)))
            b = apply_step(b, s.skip, step, record=False)
            assert s._key(a) == s._key(b)
        assert all(p.check(s.initial, a) == p.check(s.initial, b) for p in s.properties)


class _Reach(_Search):
    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self.reached: set = set()

    def _visit(self, world, schedule):
        self.reached.add((world.now, tuple(world.chains[c].key() for c in sorted(world.chains))))
        super()._visit(world, schedule)


@pytest.mark.parametrize("name,horizon", [("adversarial-bob", 14), ("adversarial-alice-carol", 8)])
def test_deferred_reveals_reach_the_same_chain_states(name, horizon):
    cfg = preset_scenario(name)
    runs = []
    for defer in (True, False):
        s = _Reach(cfg, preset_config(name, defer_reveals=defer, horizon=horizon),
                   EXPLORATIONS[name]["properties"](), name)
        s.run()
        assert not s.report.truncations
        runs.append(s.reached)
    assert runs[0] == runs[1]


# -- alphabet audit --------------------------------------------------------------------

def _semantic(tx):
    return (tx.submitter, tx.chain, tx.target, tx.function, frozenset((k, v) for k, v in tx.args if v is not None))


def naive_alphabet(world, s, others):
    """Every call shape over the full argument pools, kept if accepted alone or after one other call."""
    calls = []
    addresses = sorted({p.address for p in world.parties})
    for a in s.adv:
        known = world.knowledge_of(a)
        secrets = [x for x in known.secrets if x in s.secrets]
        sigs = list(known.signatures)
        locks = {hash_secret(x) for x in s.secrets} | {v for g in sigs for v in g.payload if isinstance(v, Hashlock)}
        pools = {"secret": secrets + [None], "sig": sigs + [None], "candidate": addresses,
                 "replace_hashlock": sorted(locks, key=lambda h: h.digest), "seq": [None]}
        pools["new_swap_hashlock"] = pools["replace_hashlock"]
        for chain, cid in s.ecfg.scope:
            c = world.chains[chain].contract(cid)
            if c is None or c.status != "active":
                continue
            table = ct.SWAP_FUNCTIONS if isinstance(c, ct.MutSwapContract) else ct.HTLC_FUNCTIONS
            for fn_name, fn in table.items():
                params = list(inspect.signature(fn).parameters)[3:]
                combos = [{}]
                for p in params:
                    combos = [{**cmb, p: v} for cmb in combos for v in pools[p]]
                calls += [make_tx(a, chain, cid, fn_name, **{k: v for k, v in cmb.items() if v is not None})
                          for cmb in combos]
    landing = world.now + 1
    enabled = set()
    by_chain: dict = {}
    for tx in calls + list(others):
        by_chain.setdefault(tx.chain, []).append(tx)
    for chain, txs in by_chain.items():
        ledger = world.chains[chain]
        afters = [(o, after) for o in txs for after, res in [ledger.apply(o, landing)] if res.accepted]
        for tx in txs:
            if tx.submitter not in s.adv:
                continue
            if ledger.apply(tx, landing)[1].accepted or any(
                    o != tx and after.apply(tx, landing)[1].accepted for o, after in afters):
                enabled.add(_semantic(tx))
    return enabled


@pytest.mark.parametrize("name,seed", [("adversarial-alice-carol", 1), ("adversarial-alice-bob", 2),
                                       ("adversarial-bob", 3)])
def test_alphabet_matches_independent_reconstruction(name, seed):
    s, root = search(name)
    rng = random.Random(seed)
    w = root
    audited = 0
    while w.now < s.horizon:
        decided = decisions(w, s.skip)
        others = [tx for txs, _ in decided.values() for tx in txs]
        slots = enabled_alphabet(w, s.adv, s.ecfg.scope, s.secrets, others, defer_reveals=s.ecfg.defer_reveals)
        offered = {_semantic(tx): tx for slot in slots for tx in slot}
        expected = naive_alphabet(w, s, others)
        assert expected <= set(offered), (w.now, expected - set(offered))
        for key, tx in offered.items():
            if key not in expected:
                # The only extra entries are pure reveals of unpublished secrets.
                assert any(not w.public.knows_secret(x) for x in tx.secrets()), (w.now, tx)
        audited += len(expected)
        w, _ = rng.choice(list(s.children(w)))
    assert audited > 0


# -- coverage of the adversary library ---------------------------------------------------

LIBRARY = ["leader-inconsistent-hashlocks", "leader-mutate-one-contract-only", "leader-claim-ba-then-mutate-ab",
           "leader-griefing-carol", "leader-replace-one-contract-only", "leader-staggered-consistent",
           "leader-staggered-inconsistent"]


@pytest.mark.parametrize("scenario", LIBRARY)
def test_library_behaviour_is_an_explored_path(scenario):
    ecfg = preset_config("adversarial-alice-carol")
    assert library_calls_outside_alphabet(scenario, ecfg) == []
    scoped = {cid for _, cid in ecfg.scope}
    trace = run_scenario(load_scenario(scenario)).trace
    adv = {address_of(a) for a in ecfg.adversaries}
    assert any(r["submitter"] in adv and r["contract"] in scoped and r["status"] == "accepted"
               and r["round"] > ecfg.explore_from for r in trace)


def test_silent_bob_is_an_explored_path():
    assert library_calls_outside_alphabet("leader-transfer-silent-bob", preset_config("adversarial-bob")) == []
