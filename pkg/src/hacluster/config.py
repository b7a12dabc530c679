"""Cluster configuration: dataclasses plus the TOML loader.

Field names for each section are frozen here and documented in the README.
All durations are written in the file as integer/float milliseconds
(``*_ms``) and stored on the dataclasses as float seconds.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

MAX_BACKENDS = 16


@dataclass(frozen=True)
class MemberSpec:
    name: str
    ordinal: int
    host: str = "127.0.0.1"
    votes: int = 1


@dataclass(frozen=True)
class BackendSpec:
    id: str
    hostname: str
    host: str = "127.0.0.1"
    port: int = 0  # 0 = derive from fabric.real_port_base


@dataclass(frozen=True)
class ExportSpec:
    path: str
    clients: str
    mode: str = "ro"  # "ro" | "rw"


@dataclass(frozen=True)
class FabricSettings:
    mode: str = "sim"  # "sim" | "loopback"
    seed: int = 0
    base_latency: float = 0.001
    jitter: float = 0.001
    drop_rate: float = 0.0
    real_port_base: int = 46000
    fence_grant_delay: float = 0.2


@dataclass(frozen=True)
class ServiceSettings:
    name: str = "HAPC"
    vip: str = "192.168.1.20"
    probe_interval: float = 1.0
    probe_timeout: float = 0.5
    fall_count: int = 2
    rise_count: int = 2
    monitor_interval: float = 0.5
    start_retry_cooldown: float = 10.0
    relocation_grace: float = 2.0
    client_timeout: float = 0.25
    retry_backoff_initial: float = 0.05
    retry_backoff_cap: float = 0.8


@dataclass(frozen=True)
class TopologySettings:
    mode: str = "two_tier"  # "two_tier" | "three_tier"
    store_node: str = "nfs01"


@dataclass(frozen=True)
class ClusterConfig:
    cluster_name: str
    members: tuple[MemberSpec, ...]
    heartbeat_interval: float
    failure_window: float
    two_node: bool
    service: ServiceSettings
    backends: tuple[BackendSpec, ...]
    exports: tuple[ExportSpec, ...]
    volume_id: str
    fabric: FabricSettings
    topology: TopologySettings

    @property
    def expected_votes(self) -> int:
        return sum(m.votes for m in self.members)

    def member(self, name: str) -> MemberSpec:
        for m in self.members:
            if m.name == name:
                return m
        raise KeyError(name)

    def backend(self, backend_id: str) -> BackendSpec:
        for b in self.backends:
            if b.id == backend_id:
                return b
        raise KeyError(backend_id)

    def node_count(self) -> int:
        """Total machines in the deployment (balancers + backends + any dedicated store node)."""
        n = len(self.members) + len(self.backends)
        if self.topology.mode == "three_tier":
            n += 1
        return n


def _ms(raw: dict, key: str, default_ms: float) -> float:
    return float(raw.get(key, default_ms)) / 1000.0


def _validate(cfg: ClusterConfig) -> None:
    names = [m.name for m in cfg.members]
    ordinals = [m.ordinal for m in cfg.members]
    if not names:
        raise ConfigError("[cluster] needs at least one member")
    if len(set(names)) != len(names):
        raise ConfigError("member names must be unique")
    if len(set(ordinals)) != len(ordinals):
        raise ConfigError("member ordinals must be unique")
    if any(o < 1 for o in ordinals):
        raise ConfigError("member ordinals must be >= 1")
    if any(not n for n in names):
        raise ConfigError("member names must be non-empty")
    if cfg.two_node and len(cfg.members) != 2:
        raise ConfigError("two_node=true requires exactly 2 members")
    if not 1 <= len(cfg.backends) <= MAX_BACKENDS:
        raise ConfigError(f"backend pool must have 1..{MAX_BACKENDS} entries")
    backend_ids = [b.id for b in cfg.backends]
    if len(set(backend_ids)) != len(backend_ids):
        raise ConfigError("backend ids must be unique")
    for e in cfg.exports:
        if not e.path.startswith("/"):
            raise ConfigError(f"export path {e.path!r} must be absolute")
        if e.mode not in ("ro", "rw"):
            raise ConfigError(f"export mode {e.mode!r} must be ro or rw")
    if cfg.fabric.mode not in ("sim", "loopback"):
        raise ConfigError(f"fabric mode {cfg.fabric.mode!r} must be sim or loopback")
    if not 0.0 <= cfg.fabric.drop_rate <= 1.0:
        raise ConfigError("drop_rate must be in [0, 1]")
    if cfg.topology.mode not in ("two_tier", "three_tier"):
        raise ConfigError(f"topology mode {cfg.topology.mode!r} must be two_tier or three_tier")
    if cfg.heartbeat_interval <= 0 or cfg.failure_window <= 0:
        raise ConfigError("heartbeat_interval and failure_window must be positive")


def from_dict(doc: dict) -> ClusterConfig:
    try:
        cl = doc["cluster"]
        members = tuple(
            MemberSpec(
                name=m["name"],
                ordinal=int(m["ordinal"]),
                host=m.get("host", "127.0.0.1"),
                votes=int(m.get("votes", 1)),
            )
            for m in cl.get("members", [])
        )
        svc_raw = doc.get("service", {})
        service = ServiceSettings(
            name=svc_raw.get("name", "HAPC"),
            vip=svc_raw.get("vip", "192.168.1.20"),
            probe_interval=_ms(svc_raw, "probe_interval_ms", 1000),
            probe_timeout=_ms(svc_raw, "probe_timeout_ms", 500),
            fall_count=int(svc_raw.get("fall_count", 2)),
            rise_count=int(svc_raw.get("rise_count", 2)),
            monitor_interval=_ms(svc_raw, "monitor_interval_ms", 500),
            start_retry_cooldown=_ms(svc_raw, "start_retry_cooldown_ms", 10000),
            relocation_grace=_ms(svc_raw, "relocation_grace_ms", 2000),
            client_timeout=_ms(svc_raw, "client_timeout_ms", 250),
            retry_backoff_initial=_ms(svc_raw, "retry_backoff_initial_ms", 50),
            retry_backoff_cap=_ms(svc_raw, "retry_backoff_cap_ms", 800),
        )
        backends = tuple(
            BackendSpec(
                id=b["id"],
                hostname=b.get("hostname", f"{b['id']}.example.com"),
                host=b.get("host", "127.0.0.1"),
                port=int(b.get("port", 0)),
            )
            for b in doc.get("backends", [])
        )
        st = doc.get("store", {})
        exports = tuple(
            ExportSpec(path=e["path"], clients=e["clients"], mode=e.get("mode", "ro"))
            for e in st.get("exports", [{"path": "/nfs", "clients": "*.example.com", "mode": "rw"}])
        )
        fb = doc.get("fabric", {})
        fabric = FabricSettings(
            mode=fb.get("mode", "sim"),
            seed=int(fb.get("seed", 0)),
            base_latency=_ms(fb, "base_latency_ms", 1.0),
            jitter=_ms(fb, "jitter_ms", 1.0),
            drop_rate=float(fb.get("drop_rate", 0.0)),
            real_port_base=int(fb.get("real_port_base", 46000)),
            fence_grant_delay=_ms(fb, "fence_grant_delay_ms", 200),
        )
        topo_raw = doc.get("topology", {})
        topology = TopologySettings(
            mode=topo_raw.get("mode", "two_tier"),
            store_node=topo_raw.get("store_node", "nfs01"),
        )
        cfg = ClusterConfig(
            cluster_name=cl["name"],
            members=members,
            heartbeat_interval=_ms(cl, "heartbeat_interval_ms", 500),
            failure_window=_ms(cl, "failure_window_ms", 1500),
            two_node=bool(cl.get("two_node", len(members) == 2)),
            service=service,
            backends=backends,
            exports=exports,
            volume_id=st.get("volume", "san-vol-1"),
            fabric=fabric,
            topology=topology,
        )
    except KeyError as exc:
        raise ConfigError(f"missing required config key: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    _validate(cfg)
    return cfg


def load_config(path: str) -> ClusterConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(doc)
