"""Identities, assets, secrets, hashlocks and symbolic signatures."""

from __future__ import annotations

import hashlib
import json
import random
from functools import lru_cache
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Any, Iterable

Round = int
DELTA = 1


@dataclass(frozen=True)
class PartyId:
    name: str
    address: str


@dataclass(frozen=True)
class AssetAmount:
    kind: str
    quantity: int

    def __post_init__(self) -> None:
        if self.quantity < 0:
            raise ValueError("asset quantity must be non-negative")


@dataclass(frozen=True)
class Secret:
    value: bytes
    label: str = field(default="", compare=False)

    def __repr__(self) -> str:
        return f"Secret({self.label or self.value.hex()[:12]})"


@dataclass(frozen=True)
class Hashlock:
    digest: bytes

    def __repr__(self) -> str:
        return f"Hashlock({self.digest.hex()[:12]})"


@lru_cache(maxsize=4096)
def hash_secret(secret: Secret) -> Hashlock:
    return Hashlock(hashlib.sha256(secret.value).digest())


def verify(lock: Hashlock, secret: Secret | None) -> bool:
    return secret is not None and hash_secret(secret) == lock


@dataclass(frozen=True)
class SignedMutation:
    """A symbolic signature: whoever holds one can show it, nobody can forge one.

    The payload is the ordered field list that was signed; the nonce only
    distinguishes otherwise equal signatures and never affects consistency.
    """

    signer: str
    payload: tuple
    nonce: int = 0

    def valid_for(self, address: str) -> bool:
        return self.signer == address

    def message(self) -> tuple:
        return self.payload


def sign(signer: PartyId | str, payload: Iterable[Any], nonce: int = 0) -> SignedMutation:
    address = signer.address if isinstance(signer, PartyId) else signer
    return SignedMutation(address, tuple(payload), nonce)


def consistent(a: SignedMutation, b: SignedMutation) -> bool:
    return a.signer == b.signer and a.payload == b.payload


@dataclass(frozen=True)
class KnowledgeSet:
    secrets: frozenset = frozenset()
    signatures: frozenset = frozenset()

    def add(self, secrets: Iterable[Secret] = (), signatures: Iterable[SignedMutation] = ()) -> KnowledgeSet:
        secrets = frozenset(secrets)
        signatures = frozenset(signatures)
        if secrets <= self.secrets and signatures <= self.signatures:
            return self
        return KnowledgeSet(self.secrets | secrets, self.signatures | signatures)

    def union(self, other: KnowledgeSet) -> KnowledgeSet:
        return self.add(other.secrets, other.signatures)

    def knows_secret(self, secret: Secret) -> bool:
        return secret in self.secrets

    def preimage_of(self, lock: Hashlock | None) -> Secret | None:
        if lock is None:
            return None
        found = [s for s in self.secrets if hash_secret(s) == lock]
        return min(found, key=lambda s: s.value) if found else None


def make_secrets(seed: int, labels: Iterable[str]) -> dict[str, Secret]:
    """Draw one 32-byte secret per label, in the given order, from the seed."""
    rng = random.Random(seed)
    return {label: Secret(rng.randbytes(32), label) for label in labels}


def canonical(value: Any) -> Any:
    """JSON-ready form with a fixed field order, used for digests and traces."""
    if isinstance(value, Hashlock):
        return value.digest.hex()
    if isinstance(value, Secret):
        return value.value.hex()
    if isinstance(value, bytes):
        return value.hex()
    if is_dataclass(value) and not isinstance(value, type):
        return {f.name: canonical(getattr(value, f.name)) for f in fields(value) if f.compare}
    if isinstance(value, dict):
        return {str(k): canonical(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    if isinstance(value, (frozenset, set)):
        return sorted((canonical(v) for v in value), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(value, (list, tuple)):
        return [canonical(v) for v in value]
    return value


def digest(value: Any) -> str:
    encoded = json.dumps(canonical(value), separators=(",", ":"), sort_keys=False)
    return hashlib.sha256(encoded.encode()).hexdigest()
