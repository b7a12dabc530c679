"""Term-claim authority and virtual-endpoint registry.

This is the linearization point for ownership: every term is granted to at
most one node, a grant may carry a fence of the previous owner, and the vip
registry only accepts binds from the claimant of a strictly newer epoch.
It plays the role of a fence device plus gratuitous-ARP at miniature scale.

Tie-break: claims are decided ``grant_delay`` after submission, and claims
due at the same instant are decided lowest-ordinal first, so a symmetric
two-node race is always won by the lower ordinal.

Wire protocol (UTF-8 lines):

    CLAIM <cluster> <node> <ordinal> <new_term> <fence_target|->
        -> GRANT <term> | DENY <reason> | PENDING <decide_at>
    BIND <vip> <node> <epoch>    -> OK | ERR stale-epoch | ERR not-claimant
    UNBIND <vip> <node> <epoch>  -> OK | ERR not-owner
    RESOLVE <vip>                -> OWNER <node> <epoch> | UNBOUND
    FLOOR <node>                 -> FLOOR <term>
"""

from __future__ import annotations

from dataclasses import dataclass


DENY_UNAVAILABLE = "unavailable"
DENY_TERM_TAKEN = "term-taken"
DENY_CLUSTER_MISMATCH = "cluster-mismatch"


@dataclass
class PendingClaim:
    node: str
    ordinal: int
    term: int
    target: str | None
    submitted: float
    decide_at: float


class ClaimAuthority:
    def __init__(self, cluster_name: str, grant_delay: float = 0.2, trace=None):
        self.cluster_name = cluster_name
        self.grant_delay = grant_delay
        self.available = True
        self.highest_granted = 0
        self.grants: dict[int, tuple[str, str | None]] = {}
        self.fence_floors: dict[str, int] = {}
        self._pending: dict[tuple[str, int], PendingClaim] = {}
        self._decided: dict[tuple[str, int], tuple[str, str]] = {}  # key -> (verdict, detail)
        self._registry: dict[str, tuple[str, int]] = {}
        self._trace = trace or (lambda line: None)

    # -- claims ------------------------------------------------------------

    def fence_floor(self, node: str) -> int:
        return self.fence_floors.get(node, 0)

    def holder(self, term: int) -> str | None:
        g = self.grants.get(term)
        return g[0] if g else None

    def _decide_due(self, now: float) -> None:
        due = [p for p in self._pending.values() if p.decide_at <= now]
        due.sort(key=lambda p: (p.decide_at, p.submitted, p.ordinal, p.node))
        for p in due:
            del self._pending[(p.node, p.term)]
            if not self.available:
                verdict = ("deny", DENY_UNAVAILABLE)
            elif p.term <= self.highest_granted:
                verdict = ("deny", DENY_TERM_TAKEN)
            else:
                self.grants[p.term] = (p.node, p.target)
                self.highest_granted = p.term
                if p.target is not None:
                    floor = p.term - 1
                    if floor > self.fence_floors.get(p.target, 0):
                        self.fence_floors[p.target] = floor
                verdict = ("grant", "")
            self._decided[(p.node, p.term)] = verdict
            kind, detail = verdict
            self._trace(
                f"claim node={p.node} term={p.term} target={p.target or '-'}"
                f" -> {kind}{':' + detail if detail else ''}"
            )

    def submit_claim(self, now: float, node: str, ordinal: int, term: int,
                     target: str | None) -> tuple[str, str]:
        """Returns (status, detail): ("granted"|"denied"|"pending", detail)."""
        self._decide_due(now)
        if not self.available:
            return "denied", DENY_UNAVAILABLE
        key = (node, term)
        if key in self._decided:
            verdict, detail = self._decided[key]
            return ("granted", str(term)) if verdict == "grant" else ("denied", detail)
        if term <= self.highest_granted:
            return "denied", DENY_TERM_TAKEN
        if key not in self._pending:
            self._pending[key] = PendingClaim(node, ordinal, term, target, now, now + self.grant_delay)
        return "pending", f"{self._pending[key].decide_at:.6f}"

    # -- registry ----------------------------------------------------------

    def bind(self, vip: str, node: str, epoch: int) -> str:
        current = self._registry.get(vip)
        if current is not None and epoch <= current[1]:
            self._trace(f"bind vip={vip} node={node} epoch={epoch} -> stale-epoch")
            return "ERR stale-epoch"
        grant = self.grants.get(epoch)
        if grant is None or grant[0] != node:
            self._trace(f"bind vip={vip} node={node} epoch={epoch} -> not-claimant")
            return "ERR not-claimant"
        self._registry[vip] = (node, epoch)
        self._trace(f"bind vip={vip} node={node} epoch={epoch} -> ok")
        return "OK"

    def unbind(self, vip: str, node: str, epoch: int) -> str:
        if self._registry.get(vip) != (node, epoch):
            return "ERR not-owner"
        del self._registry[vip]
        self._trace(f"unbind vip={vip} node={node} epoch={epoch}")
        return "OK"

    def resolve(self, vip: str) -> tuple[str, int] | None:
        return self._registry.get(vip)

    # -- wire adapter --------------------------------------------------------

    def handle_line(self, line: str, now: float) -> str:
        self._decide_due(now)
        parts = line.strip().split(" ")
        verb = parts[0] if parts else ""
        if verb == "CLAIM" and len(parts) == 6:
            cluster, node, ordinal, term, target = parts[1:]
            if cluster != self.cluster_name:
                return f"DENY {DENY_CLUSTER_MISMATCH}"
            status, detail = self.submit_claim(
                now, node, int(ordinal), int(term), None if target == "-" else target
            )
            if status == "granted":
                return f"GRANT {detail}"
            if status == "denied":
                return f"DENY {detail}"
            return f"PENDING {detail}"
        if verb == "BIND" and len(parts) == 4:
            return self.bind(parts[1], parts[2], int(parts[3]))
        if verb == "UNBIND" and len(parts) == 4:
            return self.unbind(parts[1], parts[2], int(parts[3]))
        if verb == "RESOLVE" and len(parts) == 2:
            owner = self.resolve(parts[1])
            return f"OWNER {owner[0]} {owner[1]}" if owner else "UNBOUND"
        if verb == "FLOOR" and len(parts) == 2:
            return f"FLOOR {self.fence_floor(parts[1])}"
        return "ERR bad-request"
