"""Transport contract shared by the simulated and real-loopback fabrics.

Cluster components speak only this interface, so the same node code runs
unchanged in a deterministic single-threaded simulation or over genuine
localhost sockets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..errors import ClusterError

# Logical service names hung off a node.
SVC_HEARTBEAT = "hb"
SVC_CTL = "ctl"
SVC_HTTP = "http"
SVC_STORE = "store"
SVC_REGISTRY = "registry"

# Out-of-band management plane: never partitioned, never dropped.
MGMT_SERVICES = frozenset({SVC_REGISTRY, SVC_CTL})

REGISTRY_NODE = "registry"
REGISTRY_ADDR = None  # assigned below once Address exists


@dataclass(frozen=True)
class Address:
    """Logical endpoint: a service hosted on a named node."""

    node: str
    service: str

    def __str__(self):
        return f"{self.node}/{self.service}"


REGISTRY_ADDR = Address(REGISTRY_NODE, SVC_REGISTRY)


class FabricTimeout(ClusterError):
    """Destination unreachable (dead, partitioned, fenced, or lossy)."""


class FabricRefused(ClusterError):
    """Destination node is up but the service is not listening."""


class UnknownNode(ClusterError):
    """Fault injection names a node the fabric has never seen."""


# ---------------------------------------------------------------------------
# Fault injection vocabulary


@dataclass(frozen=True)
class Crash:
    node: str


@dataclass(frozen=True)
class Partition:
    groups: tuple[frozenset, ...]

    @staticmethod
    def of(*groups) -> "Partition":
        return Partition(tuple(frozenset(g) for g in groups))


@dataclass(frozen=True)
class Heal:
    pass


@dataclass(frozen=True)
class KillProcess:
    node: str
    resource_kind: str  # "endpoint" | "store" | "balancer"


@dataclass(frozen=True)
class DetachVolume:
    pass


@dataclass(frozen=True)
class FenceAvailability:
    """Toggle the claim/fence authority (models losing the fence device)."""

    available: bool


Fault = object  # any of the dataclasses above


class TimerHandle:
    __slots__ = ("cancelled",)

    def __init__(self):
        self.cancelled = False

    def cancel(self):
        self.cancelled = True


class Fabric:
    """Interface both fabric implementations provide.

    ``call`` is a one-shot request/response exchange (TCP-like); ``send`` is
    a fire-and-forget datagram.  ``call_later`` schedules a callback on the
    owning node's serialized executor.
    """

    def now(self) -> float:
        raise NotImplementedError

    def add_node(self, name: str) -> None:
        raise NotImplementedError

    def register(self, node: str, service: str, handler: Callable[[bytes], bytes],
                 *, framing: str = "line", term: int | None = None) -> Address:
        raise NotImplementedError

    def deregister(self, node: str, service: str) -> None:
        raise NotImplementedError

    def set_fault_hook(self, node: str, hook: Callable[[Fault], None]) -> None:
        raise NotImplementedError

    def send(self, src: str, dst: Address, line: str) -> None:
        raise NotImplementedError

    def call(self, src: str, dst: Address, payload: bytes, timeout: float) -> bytes:
        raise NotImplementedError

    def call_later(self, delay: float, fn: Callable[[], None], *, node: str | None = None) -> TimerHandle:
        raise NotImplementedError

    def inject(self, fault: Fault) -> None:
        raise NotImplementedError
