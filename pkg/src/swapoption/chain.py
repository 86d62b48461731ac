"""Isolated per-chain ledgers with one-round transaction inclusion."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Sequence

from . import contracts as ct
from .core import AssetAmount, Secret, SignedMutation, canonical, digest

DEPLOY = "deploy"


@dataclass(frozen=True)
class Transaction:
    submitter: str
    chain: str
    target: str
    function: str
    args: tuple = ()

    def kwargs(self) -> dict[str, Any]:
        return dict(self.args)

    def __post_init__(self) -> None:
        # Derived views are computed once; transactions are hashed and scanned constantly during search.
        object.__setattr__(self, "_hash", hash((self.submitter, self.chain, self.target, self.function, self.args)))
        object.__setattr__(self, "_secrets", tuple(v for _, v in self.args if isinstance(v, Secret)))
        object.__setattr__(self, "_signatures", tuple(v for _, v in self.args if isinstance(v, SignedMutation)))

    def __hash__(self) -> int:
        return self._hash

    def secrets(self) -> tuple[Secret, ...]:
        return self._secrets

    def signatures(self) -> tuple[SignedMutation, ...]:
        return self._signatures


class LedgerKey(tuple):
    """A tuple that hashes its nested contents only once."""

    def __hash__(self) -> int:
        h = self.__dict__.get("h")
        if h is None:
            h = self.__dict__["h"] = tuple.__hash__(self)
        return h


def make_tx(submitter: str, chain: str, target: str, function: str, **args: Any) -> Transaction:
    return Transaction(submitter, chain, target, function, tuple(sorted(args.items())))


@dataclass(frozen=True)
class TxResult:
    status: str
    reason: str = ""
    state_delta: str = ""
    emitted: tuple = ()

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"


@dataclass(frozen=True)
class ChainLedger:
    """One chain's balances and contracts. Instances are never mutated in place."""

    chain_id: str
    balances: dict = field(default_factory=dict)
    contracts: dict = field(default_factory=dict)
    pending: tuple = ()

    def key(self) -> tuple:
        return self._key

    @cached_property
    def _key(self) -> tuple:
        return LedgerKey((self.chain_id, tuple(sorted(self.balances.items())),
                          tuple(sorted(self.contracts.items())), self.pending))

    def state_digest(self) -> str:
        return digest({"chain": self.chain_id, "balances": self.balances, "contracts": self.contracts})

    def balance_of(self, address: str, kind: str) -> int:
        return self.balances.get((address, kind), 0)

    def contract(self, contract_id: str):
        return self.contracts.get(contract_id)

    def totals(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for (_, kind), qty in self.balances.items():
            out[kind] = out.get(kind, 0) + qty
        for c in self.contracts.values():
            held = ct.escrowed(c)
            if held is not None:
                out[held.kind] = out.get(held.kind, 0) + held.quantity
        return out

    def submit(self, tx: Transaction, now: int) -> ChainLedger:
        return ChainLedger(self.chain_id, self.balances, self.contracts, self.pending + ((tx, now),))

    def due(self, now: int) -> list[Transaction]:
        return [tx for tx, sent in self.pending if sent < now]

    def execute_round(self, now: int, order: Sequence[int] | None = None,
                      digests: bool = False) -> tuple[ChainLedger, list]:
        """Run every due transaction; `order` permutes them, default is submission order.

        Each result is (tx, TxResult, digest of the chain right after tx or "").
        """
        due = [(tx, sent) for tx, sent in self.pending if sent < now]
        later = tuple(p for p in self.pending if p[1] >= now)
        if order is None:
            order = range(len(due))
        elif sorted(order) != list(range(len(due))):
            raise ValueError(f"ordering {list(order)} does not cover {len(due)} due transactions on {self.chain_id}")
        ledger = ChainLedger(self.chain_id, self.balances, self.contracts, later)
        results = []
        for i in order:
            tx = due[i][0]
            ledger, res = ledger.apply(tx, now)
            results.append((tx, res, ledger.state_digest() if digests else ""))
        return ledger, results

    def apply(self, tx: Transaction, now: int) -> tuple[ChainLedger, TxResult]:
        emitted = tx.secrets()
        try:
            if tx.target == DEPLOY:
                ledger, delta = self._deploy(tx, now)
            else:
                ledger, delta = self._call(tx, now)
        except ct.Rejected as exc:
            return self, TxResult("rejected", exc.reason, "", emitted)
        return ledger, TxResult("accepted", "", delta, emitted)

    def _call(self, tx: Transaction, now: int) -> tuple[ChainLedger, str]:
        c = self.contracts.get(tx.target)
        if c is None:
            raise ct.Rejected("no such contract")
        new_c, payout = ct.invoke(c, tx.function, tx.submitter, now, tx.kwargs())
        contracts = dict(self.contracts)
        contracts[tx.target] = new_c
        balances = self.balances
        delta = f"{tx.target}.{tx.function}"
        if payout is not None:
            balances = _credit(balances, payout.to, payout.asset.kind, payout.asset.quantity)
            delta += f" pays {payout.asset.quantity} {payout.asset.kind} to {payout.to}"
        return ChainLedger(self.chain_id, balances, contracts, self.pending), delta

    def _deploy(self, tx: Transaction, now: int) -> tuple[ChainLedger, str]:
        a = tx.kwargs()
        cid = a.pop("contract_id", None)
        kind = a.pop("kind", None)
        if not cid or cid in self.contracts:
            raise ct.Rejected("contract exists" if cid else "missing contract id")
        sender = a.get("sender")
        if tx.submitter != sender:
            raise ct.Rejected("not sender")
        asset: AssetAmount = a.get("asset")
        if asset is None or self.balance_of(sender, asset.kind) < asset.quantity:
            raise ct.Rejected("insufficient balance")
        try:
            if kind == "swap":
                contract = ct.deploy_mut_swap(**a)
            elif kind == "htlc":
                contract = ct.deploy_htlc(now=now, **a)
            else:
                raise ct.Rejected("unknown contract kind")
        except TypeError:
            raise ct.Rejected("bad arguments") from None
        contracts = dict(self.contracts)
        contracts[cid] = contract
        balances = _credit(self.balances, sender, asset.kind, -asset.quantity)
        return ChainLedger(self.chain_id, balances, contracts, self.pending), f"{cid} deployed escrowing {asset.quantity} {asset.kind}"


def _credit(balances: dict, address: str, kind: str, quantity: int) -> dict:
    out = dict(balances)
    out[(address, kind)] = out.get((address, kind), 0) + quantity
    return out


def genesis(chain_id: str, holdings: Iterable[tuple[str, str, int]]) -> ChainLedger:
    return ChainLedger(chain_id, {(addr, kind): qty for addr, kind, qty in holdings})


def ledger_record(ledger: ChainLedger) -> dict:
    return canonical({"chain": ledger.chain_id, "balances": {f"{a}/{k}": q for (a, k), q in ledger.balances.items()},
                      "contracts": ledger.contracts})
