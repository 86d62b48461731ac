from hypothesis import given, strategies as st

from swapoption.core import (AssetAmount, KnowledgeSet, Secret, canonical, consistent, digest, hash_secret,
                             make_secrets, sign, verify)
import pytest

secrets = st.binary(min_size=1, max_size=40).map(Secret)


def test_hash_is_deterministic():
    assert hash_secret(Secret(b"")) == hash_secret(Secret(b""))


def test_hash_distinguishes_drawn_secrets():
    s = make_secrets(0, ["Alice.A1", "Carol.C1"])
    assert hash_secret(s["Alice.A1"]) != hash_secret(s["Carol.C1"])


def test_verify():
    s = make_secrets(1, ["A1", "C1"])
    assert verify(hash_secret(s["A1"]), s["A1"])
    assert not verify(hash_secret(s["A1"]), s["C1"])
    assert not verify(hash_secret(s["A1"]), None)


def test_secret_equality_ignores_label():
    assert Secret(b"x", "one") == Secret(b"x", "two")


def test_secrets_are_32_bytes_and_seeded():
    a = make_secrets(7, ["p", "q"])
    assert all(len(s.value) == 32 for s in a.values())
    assert a == make_secrets(7, ["p", "q"])
    assert a != make_secrets(8, ["p", "q"])


def test_signature_validity_and_payload():
    sig = sign("alice", ("h1", "h2", "carol"), 7)
    assert sig.valid_for("alice") and not sig.valid_for("bob")
    assert sig.message() == ("h1", "h2", "carol")


def test_consistency():
    a = sign("alice", ("h1", "h2", "carol"), 0)
    assert consistent(a, sign("alice", ("h1", "h2", "carol"), 9))
    assert not consistent(a, sign("alice", ("h1", "hx", "carol")))
    assert not consistent(a, sign("alice", ("h1", "h2", "dave")))
    assert not consistent(a, sign("bob", ("h1", "h2", "carol")))


def test_negative_asset_rejected():
    with pytest.raises(ValueError):
        AssetAmount("florin", -1)


@given(st.lists(st.sampled_from(["a", "b", "c"]), min_size=1), st.lists(st.integers(0, 3), min_size=1))
def test_consistency_is_an_equivalence_for_one_signer(payload_items, nonces):
    sigs = [sign("alice", tuple(payload_items[: i % len(payload_items) + 1]), n) for i, n in enumerate(nonces)]
    for a in sigs:
        assert consistent(a, a)
        for b in sigs:
            assert consistent(a, b) == consistent(b, a)
            for c in sigs:
                if consistent(a, b) and consistent(b, c):
                    assert consistent(a, c)


@given(st.lists(secrets), st.lists(secrets))
def test_knowledge_only_grows(first, second):
    k = KnowledgeSet().add(first)
    k2 = k.add(second)
    assert k.secrets <= k2.secrets
    assert all(k2.knows_secret(s) for s in first + second)
    assert k.add(first) is k


@given(st.lists(secrets, min_size=1, unique=True))
def test_preimage_lookup(items):
    k = KnowledgeSet().add(items)
    for s in items:
        assert hash_secret(k.preimage_of(hash_secret(s))) == hash_secret(s)
    assert k.preimage_of(None) is None


def test_digest_is_stable_and_order_free_for_sets():
    assert digest({"b": 1, "a": frozenset({2, 1})}) == digest({"a": frozenset({1, 2}), "b": 1})
    assert canonical(hash_secret(Secret(b"x"))) == hash_secret(Secret(b"x")).digest.hex()
