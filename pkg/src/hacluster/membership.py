"""Cluster membership: heartbeats, failure detection, quorum.

Wire format (UDP-style datagram over the fabric, one line):

    HB <cluster_name> <node_name> <ordinal> <incarnation> <owner_term>

``owner_term`` is the sender's own ownership claim for the resource group
(0 when it owns nothing); peers derive the cluster-wide owner as the online
member with the highest claim.  Messages from a different cluster name are
dropped and counted.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .config import ClusterConfig
from .errors import DuplicateOrdinal, UnknownMember, UnknownSelf
from .fabric import Address, Fabric, SVC_HEARTBEAT


class MemberStatus(Enum):
    ONLINE = "Online"
    OFFLINE = "Offline"


@dataclass(frozen=True)
class NodeId:
    name: str
    ordinal: int


@dataclass
class Member:
    id: NodeId
    status: MemberStatus
    incarnation: int
    votes: int
    is_local: bool
    last_heartbeat: float
    claimed_term: int = 0


@dataclass(frozen=True)
class QuorumState:
    quorate: bool
    online_votes: int
    expected_votes: int
    two_node_mode: bool


@dataclass(frozen=True)
class MemberUp:
    node: str


@dataclass(frozen=True)
class MemberDown:
    node: str


MembershipDelta = object  # MemberUp | MemberDown


def quorum(members, *, expected_votes: int, two_node: bool) -> QuorumState:
    """Pure quorum computation from member liveness."""
    online = sum(m.votes for m in members if m.status is MemberStatus.ONLINE)
    if two_node:
        quorate = online >= 1
    else:
        quorate = 2 * online > expected_votes
    return QuorumState(quorate=quorate, online_votes=online,
                       expected_votes=expected_votes, two_node_mode=two_node)


@dataclass(frozen=True)
class MemberView:
    name: str
    ordinal: int
    status: MemberStatus
    incarnation: int
    is_local: bool
    claimed_term: int
    rgmanager: bool


@dataclass(frozen=True)
class MembershipSnapshot:
    cluster_name: str
    members: tuple[MemberView, ...]
    quorum: QuorumState

    def member(self, name: str) -> MemberView:
        for m in self.members:
            if m.name == name:
                return m
        raise KeyError(name)

    def is_online(self, name: str) -> bool:
        return self.member(name).status is MemberStatus.ONLINE

    def online_members(self) -> tuple[MemberView, ...]:
        return tuple(m for m in self.members if m.status is MemberStatus.ONLINE)


class Membership:
    """Per-node membership instance.

    Mutation entry points (heartbeat receipt, tick) are serialized by the
    node's event executor; ``snapshot`` may be read at any point.
    """

    def __init__(self, config: ClusterConfig, self_name: str, fabric: Fabric,
                 incarnation: int = 1,
                 on_delta: Optional[Callable[[MembershipDelta], None]] = None):
        ordinals = [m.ordinal for m in config.members]
        if len(set(ordinals)) != len(ordinals):
            raise DuplicateOrdinal(f"duplicate ordinals in config: {ordinals}")
        if self_name not in [m.name for m in config.members]:
            raise UnknownSelf(self_name)
        self.config = config
        self.self_name = self_name
        self.fabric = fabric
        self.incarnation = incarnation
        self.on_delta = on_delta or (lambda delta: None)
        self.mismatched_heartbeats = 0
        self._local_claim = 0
        self._timer = None
        self._stopped = False
        now = fabric.now()
        self.members: dict[str, Member] = {}
        for spec in config.members:
            local = spec.name == self_name
            self.members[spec.name] = Member(
                id=NodeId(spec.name, spec.ordinal),
                status=MemberStatus.ONLINE if local else MemberStatus.OFFLINE,
                incarnation=incarnation if local else 0,
                votes=spec.votes,
                is_local=local,
                last_heartbeat=now,
            )

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        self._stopped = False
        self._beat()

    def stop(self) -> None:
        self._stopped = True
        if self._timer is not None:
            self._timer.cancel()

    def _beat(self) -> None:
        if self._stopped:
            return
        now = self.fabric.now()
        local = self.members[self.self_name]
        local.last_heartbeat = now
        local.claimed_term = self._local_claim
        line = (f"HB {self.config.cluster_name} {self.self_name} "
                f"{local.id.ordinal} {self.incarnation} {self._local_claim}\n")
        for spec in self.config.members:
            if spec.name != self.self_name:
                self.fabric.send(self.self_name, Address(spec.name, SVC_HEARTBEAT), line)
        for delta in self.tick(now):
            self.on_delta(delta)
        self._timer = self.fabric.call_later(
            self.config.heartbeat_interval, self._beat, node=self.self_name)

    # -- the group manager piggybacks its claim on outgoing heartbeats --------

    def set_local_claim(self, term: int) -> None:
        self._local_claim = term
        self.members[self.self_name].claimed_term = term

    # -- message handling ------------------------------------------------------

    def on_heartbeat_line(self, raw: bytes) -> Optional[MembershipDelta]:
        parts = raw.decode().strip().split(" ")
        if len(parts) != 6 or parts[0] != "HB":
            self.mismatched_heartbeats += 1
            return None
        _, cluster, name, _ordinal, incarnation, owner_term = parts
        if cluster != self.config.cluster_name:
            self.mismatched_heartbeats += 1
            return None
        delta = self.on_heartbeat(name, int(incarnation), self.fabric.now(),
                                  claimed_term=int(owner_term))
        if delta is not None:
            self.on_delta(delta)
        return delta

    def on_heartbeat(self, from_name: str, incarnation: int, clock: float,
                     claimed_term: int = 0) -> Optional[MembershipDelta]:
        member = self.members.get(from_name)
        if member is None:
            raise UnknownMember(from_name)
        if incarnation < member.incarnation:
            return None  # stale sender generation
        member.incarnation = incarnation
        member.last_heartbeat = clock
        member.claimed_term = claimed_term
        if member.status is MemberStatus.OFFLINE:
            member.status = MemberStatus.ONLINE
            return MemberUp(from_name)
        return None

    def tick(self, now: float) -> list[MembershipDelta]:
        deltas = []
        for member in self.members.values():
            if member.is_local or member.status is not MemberStatus.ONLINE:
                continue
            if now - member.last_heartbeat >= self.config.failure_window:
                # claimed_term is kept: it names the term a takeover must fence.
                member.status = MemberStatus.OFFLINE
                deltas.append(MemberDown(member.id.name))
        return deltas

    # -- views ----------------------------------------------------------------

    def quorum_state(self) -> QuorumState:
        return quorum(self.members.values(),
                      expected_votes=self.config.expected_votes,
                      two_node=self.config.two_node)

    def snapshot(self) -> MembershipSnapshot:
        views = tuple(
            MemberView(
                name=m.id.name,
                ordinal=m.id.ordinal,
                status=m.status,
                incarnation=m.incarnation,
                is_local=m.is_local,
                claimed_term=m.claimed_term,
                rgmanager=m.status is MemberStatus.ONLINE,
            )
            for m in sorted(self.members.values(), key=lambda m: m.id.ordinal)
        )
        return MembershipSnapshot(
            cluster_name=self.config.cluster_name,
            members=views,
            quorum=self.quorum_state(),
        )
