"""Deterministic in-process network simulation.

Single-threaded, event-heap driven, virtual-time clock.  Identical
(seed, scenario) pairs replay identical traces; the trace doubles as the
safety oracle for fencing and single-ownership checks.

Request/response ``call``s evaluate atomically at the instant they are
issued (handlers run synchronously, nested calls recurse); latency is
sampled and recorded but only ``send`` datagrams and timers advance
delivery through virtual time.  Unreachable destinations surface as
timeouts, like real networks.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import random
from dataclasses import dataclass, field
from typing import Callable

from ..config import FabricSettings
from .authority import ClaimAuthority
from .base import (
    Address,
    Crash,
    DetachVolume,
    Fabric,
    FabricRefused,
    FabricTimeout,
    FenceAvailability,
    Heal,
    KillProcess,
    MGMT_SERVICES,
    Partition,
    REGISTRY_NODE,
    SVC_REGISTRY,
    TimerHandle,
    UnknownNode,
)


@dataclass
class _Registration:
    handler: Callable[[bytes], bytes]
    framing: str = "line"
    term: int | None = None  # None = not fenceable (hb/ctl/registry)


@dataclass
class _SimNode:
    name: str
    alive: bool = True
    services: dict = field(default_factory=dict)
    fault_hook: Callable | None = None


class SimFabric(Fabric):
    def __init__(self, settings: FabricSettings, cluster_name: str = ""):
        self.settings = settings
        self.rng = random.Random(settings.seed)
        self._now = 0.0
        self._heap: list = []
        self._seq = itertools.count()
        self._nodes: dict[str, _SimNode] = {}
        self._partition: tuple[frozenset, ...] | None = None
        self._last_delivery: dict[tuple[str, str], float] = {}
        self._volume_hooks: list[Callable] = []
        self.trace: list[str] = []
        self.authority = ClaimAuthority(cluster_name, settings.fence_grant_delay, self._trace_authority)
        self.add_node(REGISTRY_NODE)
        self.register(REGISTRY_NODE, SVC_REGISTRY, self._registry_handler, framing="line")

    # -- clock & event loop --------------------------------------------------

    def now(self) -> float:
        return self._now

    def call_later(self, delay: float, fn: Callable[[], None], *, node: str | None = None) -> TimerHandle:
        handle = TimerHandle()
        heapq.heappush(self._heap, (self._now + max(delay, 0.0), next(self._seq), node, fn, handle))
        return handle

    def step(self) -> bool:
        """Run the next pending event.  Returns False when the heap is empty."""
        if not self._heap:
            return False
        when, _, node, fn, handle = heapq.heappop(self._heap)
        self._now = max(self._now, when)
        if handle.cancelled:
            return True
        if node is not None:
            owner = self._nodes.get(node)
            if owner is None or not owner.alive:
                return True
        fn()
        return True

    def run_until(self, t: float) -> None:
        while self._heap and self._heap[0][0] <= t:
            self.step()
        self._now = max(self._now, t)

    def run_for(self, dt: float) -> None:
        self.run_until(self._now + dt)

    # -- trace -----------------------------------------------------------------

    def _trace_line(self, text: str) -> None:
        self.trace.append(f"{self._now:.6f} {text}")

    def _trace_authority(self, text: str) -> None:
        self._trace_line(text)

    def trace_digest(self) -> str:
        return hashlib.sha256("\n".join(self.trace).encode()).hexdigest()

    # -- topology ---------------------------------------------------------------

    def add_node(self, name: str) -> None:
        # Re-adding a name models a restarted machine: fresh registrations.
        self._nodes[name] = _SimNode(name)

    def node_alive(self, name: str) -> bool:
        node = self._nodes.get(name)
        return node is not None and node.alive

    def register(self, node, service, handler, *, framing="line", term=None) -> Address:
        self._nodes[node].services[service] = _Registration(handler, framing, term)
        return Address(node, service)

    def deregister(self, node, service) -> None:
        owner = self._nodes.get(node)
        if owner is not None:
            owner.services.pop(service, None)

    def set_fault_hook(self, node, hook) -> None:
        self._nodes[node].fault_hook = hook

    def add_volume_hook(self, hook: Callable) -> None:
        self._volume_hooks.append(hook)

    # -- routing ------------------------------------------------------------------

    def _partition_blocks(self, a: str, b: str) -> bool:
        if self._partition is None:
            return False
        ga = gb = None
        for i, group in enumerate(self._partition):
            if a in group:
                ga = i
            if b in group:
                gb = i
        # Nodes outside every group (clients, the registry) reach everyone.
        if ga is None or gb is None:
            return False
        return ga != gb

    def _sample_latency(self) -> float:
        return self.settings.base_latency + self.rng.random() * self.settings.jitter

    def _route_failure(self, src: str, dst: Address) -> tuple[str, str] | None:
        """Returns (kind, reason) when undeliverable, else None."""
        node = self._nodes.get(dst.node)
        if node is None or not node.alive:
            return "timeout", "node-down"
        if self._partition_blocks(src, dst.node):
            return "timeout", "partitioned"
        reg = node.services.get(dst.service)
        if reg is None:
            return "refused", "no-listener"
        if reg.term is not None and self.authority.fence_floor(dst.node) >= reg.term:
            return "timeout", f"fenced(term={reg.term})"
        if dst.service not in MGMT_SERVICES and self.settings.drop_rate > 0:
            if self.rng.random() < self.settings.drop_rate:
                return "timeout", "dropped"
        return None

    # -- messaging -------------------------------------------------------------------

    def send(self, src: str, dst: Address, line: str) -> None:
        latency = self._sample_latency()
        fifo_key = (src, dst.node)
        deliver_at = max(self._now + latency, self._last_delivery.get(fifo_key, 0.0))
        self._last_delivery[fifo_key] = deliver_at

        def deliver():
            failure = self._route_failure(src, dst)
            if failure is not None:
                self._trace_line(f"drop {src}->{dst} reason={failure[1]}")
                return
            self._trace_line(f"deliver {src}->{dst} {line.strip()}")
            self._nodes[dst.node].services[dst.service].handler(line.encode())

        self.call_later(deliver_at - self._now, deliver, node=dst.node)

    def call(self, src: str, dst: Address, payload: bytes, timeout: float) -> bytes:
        failure = self._route_failure(src, dst)
        if failure is not None:
            kind, reason = failure
            self._trace_line(f"call {src}->{dst} -> {kind}:{reason}")
            if kind == "refused":
                raise FabricRefused(f"{dst}: {reason}")
            raise FabricTimeout(f"{dst}: {reason}")
        reg = self._nodes[dst.node].services[dst.service]
        reply = reg.handler(payload)
        term = "" if reg.term is None else f" term={reg.term}"
        self._trace_line(f"call {src}->{dst} -> ok bytes={len(reply)}{term}")
        return reply

    def _registry_handler(self, payload: bytes) -> bytes:
        return self.authority.handle_line(payload.decode(), self._now).encode()

    # -- fault injection ---------------------------------------------------------------

    def _require_node(self, name: str) -> _SimNode:
        node = self._nodes.get(name)
        if node is None:
            raise UnknownNode(name)
        return node

    def inject(self, fault) -> None:
        if isinstance(fault, Crash):
            node = self._require_node(fault.node)
            node.alive = False
            self._trace_line(f"inject crash {fault.node}")
        elif isinstance(fault, Partition):
            names = [n for g in fault.groups for n in g]
            if len(names) != len(set(names)):
                raise ValueError("partition groups must be disjoint")
            for name in names:
                self._require_node(name)
            self._partition = fault.groups
            rendered = "|".join(",".join(sorted(g)) for g in fault.groups)
            self._trace_line(f"inject partition {rendered}")
        elif isinstance(fault, Heal):
            self._partition = None
            self._trace_line("inject heal")
        elif isinstance(fault, KillProcess):
            node = self._require_node(fault.node)
            self._trace_line(f"inject kill {fault.node} {fault.resource_kind}")
            if node.fault_hook is not None and node.alive:
                node.fault_hook(fault)
        elif isinstance(fault, DetachVolume):
            self._trace_line("inject detach-volume")
            for hook in self._volume_hooks:
                hook()
        elif isinstance(fault, FenceAvailability):
            self.authority.available = fault.available
            self._trace_line(f"inject fence-{'on' if fault.available else 'off'}")
        else:
            raise ValueError(f"unknown fault: {fault!r}")
