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
    REGISTRY_ADDR,
    REGISTRY_NODE,
    SVC_CTL,
    SVC_HEARTBEAT,
    SVC_HTTP,
    SVC_REGISTRY,
    SVC_STORE,
    TimerHandle,
    UnknownNode,
)
from .authority import ClaimAuthority
from .sim import SimFabric

__all__ = [
    "Address",
    "ClaimAuthority",
    "Crash",
    "DetachVolume",
    "Fabric",
    "FabricRefused",
    "FabricTimeout",
    "FenceAvailability",
    "Heal",
    "KillProcess",
    "MGMT_SERVICES",
    "Partition",
    "REGISTRY_ADDR",
    "REGISTRY_NODE",
    "SVC_CTL",
    "SVC_HEARTBEAT",
    "SVC_HTTP",
    "SVC_REGISTRY",
    "SVC_STORE",
    "SimFabric",
    "TimerHandle",
    "UnknownNode",
]
