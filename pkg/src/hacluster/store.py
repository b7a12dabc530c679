"""Embedded shared-content store: the NFS stand-in.

The owning balancer node exports the volume; backends mount it so every
backend serves identical bytes.  Single writer (the owner), epoch-gated:
a binding minted under a superseded ownership term is refused with
``stale-binding`` and the client remounts against the new owner.

Wire protocol (one request per exchange, UTF-8 header lines):

    MOUNT <hostname> <export_path>        -> OK <token> | ERR <code>
    READ <token> <path>                   -> OK <generation> <length>\\n<bytes> | ERR <code>
    WRITE <token> <path> <length>\\n<bytes> -> OK <generation> | ERR <code>
    LIST                                  -> OK <generation> <count>\\n<path per line>

Error codes: stale-binding access-denied no-such-export not-found
read-only io-error bad-request.  Tokens encode (client, epoch) as
``<hostname>@<epoch>``.
"""

from __future__ import annotations

import fnmatch
import os
import posixpath
from dataclasses import dataclass, field
from enum import Enum

from .config import ExportSpec
from .errors import (
    AccessDenied,
    NoSuchExport,
    NotFound,
    ReadOnlyExport,
    StaleBinding,
    VolumeBusy,
    VolumeMissing,
)
from .fabric import Address, Fabric


class MountStatus(Enum):
    ATTACHED = "Attached"
    STALE = "Stale"


@dataclass
class MountBinding:
    client: str
    export_path: str
    server_epoch: int
    status: MountStatus = MountStatus.ATTACHED
    writable: bool = False

    @property
    def token(self) -> str:
        return f"{self.client}@{self.server_epoch}"


def export_matches(hostname: str, pattern: str) -> bool:
    return fnmatch.fnmatchcase(hostname, pattern)


def find_export(exports: tuple[ExportSpec, ...], export_path: str, hostname: str) -> ExportSpec:
    matched_path = False
    for entry in exports:
        if entry.path == export_path:
            matched_path = True
            if export_matches(hostname, entry.clients):
                return entry
    if matched_path:
        raise AccessDenied(f"{hostname} matches no pattern for {export_path}")
    raise NoSuchExport(export_path)


def render_export_report(vip: str, exports: tuple[ExportSpec, ...]) -> str:
    lines = [f"Export list for {vip}:"]
    lines += [f"{e.path} {e.clients}" for e in exports]
    return "\n".join(lines)


class VolumeDetached(Exception):
    """Active attachment lost its path to the backing volume."""


class Attachment:
    """A node's live hold on the volume under one ownership term."""

    def __init__(self, volume: "Volume", token: int, node: str, term: int):
        self._volume = volume
        self._token = token
        self.node = node
        self.term = term

    def _check(self) -> None:
        self._volume.validate_attachment(self._token, self.node, self.term)

    @property
    def alive(self) -> bool:
        try:
            self._check()
            return True
        except (VolumeDetached, VolumeBusy):
            return False

    def read(self, path: str) -> bytes:
        self._check()
        data = self._volume.entries.get(path)
        if data is None:
            raise NotFound(path)
        return data

    def write(self, path: str, data: bytes) -> int:
        self._check()
        return self._volume.commit(path, data)

    def paths(self) -> list[str]:
        self._check()
        return sorted(self._volume.entries)

    @property
    def generation(self) -> int:
        return self._volume.generation


class Volume:
    """The shared backing volume (the SAN): survives node crashes.

    ``fence_floor`` lets the volume refuse I/O from an owner that has been
    fenced at or above its attachment term, independent of any network path.
    """

    def __init__(self, volume_id: str, fence_floor=None):
        self.volume_id = volume_id
        self.entries: dict[str, bytes] = {}
        self.generation = 0
        self.owner_epoch = 0
        self._fence_floor = fence_floor or (lambda node: 0)
        self._attach_seq = 0
        self._current_token: int | None = None
        self._detached = False

    def attach(self, node: str, term: int) -> Attachment:
        if self._fence_floor(node) >= term:
            raise VolumeBusy(f"{node} fenced at term >= {term}")
        if term < self.owner_epoch:
            raise VolumeBusy(f"attach epoch {term} < current {self.owner_epoch}")
        self.owner_epoch = term
        self._attach_seq += 1
        self._current_token = self._attach_seq
        self._detached = False
        return Attachment(self, self._attach_seq, node, term)

    def detach_current(self) -> None:
        """Fault injection: the active attachment loses its disk path."""
        self._detached = True

    def validate_attachment(self, token: int, node: str, term: int) -> None:
        if token != self._current_token or term < self.owner_epoch:
            raise VolumeBusy("attachment superseded")
        if self._detached:
            raise VolumeDetached(self.volume_id)
        if self._fence_floor(node) >= term:
            raise VolumeBusy(f"{node} fenced at term >= {term}")

    def commit(self, path: str, data: bytes) -> int:
        self.entries[path] = bytes(data)
        self.generation += 1
        return self.generation

    def snapshot(self) -> tuple[int, dict[str, bytes]]:
        return self.generation, dict(self.entries)


class DirVolume(Volume):
    """Filesystem-backed volume for real-loopback deployments.

    Entries live as files under ``root``; epoch and generation are persisted
    in dot-files so the gate survives process restarts.  Loopback mode is a
    single-host smoke lane, so plain file operations are sufficient.
    """

    def __init__(self, volume_id: str, root: str, fence_floor=None):
        super().__init__(volume_id, fence_floor)
        self.root = root
        os.makedirs(root, exist_ok=True)
        self.owner_epoch = self._read_meta(".epoch")
        self.generation = self._read_meta(".generation")
        self._load()

    def _meta_path(self, name: str) -> str:
        return os.path.join(self.root, name)

    def _read_meta(self, name: str) -> int:
        try:
            with open(self._meta_path(name)) as fh:
                return int(fh.read().strip() or 0)
        except (OSError, ValueError):
            return 0

    def _write_meta(self, name: str, value: int) -> None:
        with open(self._meta_path(name), "w") as fh:
            fh.write(str(value))

    def _load(self) -> None:
        self.entries = {}
        for dirpath, _dirs, files in os.walk(self.root):
            for fname in files:
                if fname.startswith("."):
                    continue
                full = os.path.join(dirpath, fname)
                rel = "/" + os.path.relpath(full, self.root).replace(os.sep, "/")
                with open(full, "rb") as fh:
                    self.entries[rel] = fh.read()

    def attach(self, node: str, term: int) -> Attachment:
        handle = super().attach(node, term)
        self._write_meta(".epoch", self.owner_epoch)
        self._load()
        return handle

    def commit(self, path: str, data: bytes) -> int:
        gen = super().commit(path, data)
        full = os.path.join(self.root, path.lstrip("/"))
        os.makedirs(os.path.dirname(full), exist_ok=True)
        with open(full, "wb") as fh:
            fh.write(data)
        self._write_meta(".generation", gen)
        return gen


class VolumeCatalog:
    """The volumes reachable from the balancer tier, keyed by id."""

    def __init__(self):
        self._volumes: dict[str, Volume] = {}

    def add(self, volume: Volume) -> Volume:
        self._volumes[volume.volume_id] = volume
        return volume

    def lookup(self, volume_id: str) -> Volume:
        vol = self._volumes.get(volume_id)
        if vol is None:
            raise VolumeMissing(volume_id)
        return vol


def _normalize(path: str) -> str:
    norm = posixpath.normpath(path)
    if not norm.startswith("/") or "/../" in norm + "/":
        raise NotFound(path)
    return norm


class StoreService:
    """Server side of the store protocol, bound to one attachment per term."""

    def __init__(self, exports: tuple[ExportSpec, ...], vip: str):
        self.exports = exports
        self.vip = vip
        self.attachment: Attachment | None = None
        self.serving_term = 0
        self.mounts: dict[str, MountBinding] = {}

    def start(self, attachment: Attachment, term: int) -> None:
        self.attachment = attachment
        self.serving_term = term
        self.mounts = {}

    def stop(self) -> None:
        self.attachment = None
        self.serving_term = 0
        self.mounts = {}

    def healthy(self) -> bool:
        return self.attachment is not None and self.attachment.alive

    def export_report(self) -> str:
        return render_export_report(self.vip, self.exports)

    # -- request handling ----------------------------------------------------

    def handle(self, payload: bytes) -> bytes:
        try:
            return self._dispatch(payload)
        except StaleBinding:
            return b"ERR stale-binding"
        except AccessDenied:
            return b"ERR access-denied"
        except NoSuchExport:
            return b"ERR no-such-export"
        except NotFound:
            return b"ERR not-found"
        except ReadOnlyExport:
            return b"ERR read-only"
        except (VolumeDetached, VolumeBusy):
            return b"ERR io-error"
        except ValueError:
            return b"ERR bad-request"

    def _require_attachment(self) -> Attachment:
        if self.attachment is None:
            raise VolumeDetached("store not serving")
        return self.attachment

    def _binding_for(self, token: str) -> MountBinding:
        binding = self.mounts.get(token)
        if binding is None or binding.server_epoch != self.serving_term:
            raise StaleBinding(token)
        return binding

    def _check_path(self, binding: MountBinding, path: str) -> str:
        norm = _normalize(path)
        if norm != binding.export_path and not norm.startswith(binding.export_path + "/"):
            raise NotFound(path)
        return norm

    def _dispatch(self, payload: bytes) -> bytes:
        head, _, body = payload.partition(b"\n")
        parts = head.decode().strip().split(" ")
        verb = parts[0] if parts else ""
        if verb == "MOUNT" and len(parts) == 3:
            hostname, export_path = parts[1], parts[2]
            entry = find_export(self.exports, export_path, hostname)
            self._require_attachment()
            binding = MountBinding(
                client=hostname,
                export_path=entry.path,
                server_epoch=self.serving_term,
                writable=entry.mode == "rw",
            )
            self.mounts[binding.token] = binding
            return f"OK {binding.token}".encode()
        if verb == "READ" and len(parts) == 3:
            binding = self._binding_for(parts[1])
            attachment = self._require_attachment()
            path = self._check_path(binding, parts[2])
            data = attachment.read(path)
            return f"OK {attachment.generation} {len(data)}\n".encode() + data
        if verb == "WRITE" and len(parts) == 4:
            binding = self._binding_for(parts[1])
            if not binding.writable:
                raise ReadOnlyExport(binding.export_path)
            attachment = self._require_attachment()
            path = self._check_path(binding, parts[2])
            length = int(parts[3])
            if len(body) < length:
                raise ValueError("short write body")
            generation = attachment.write(path, body[:length])
            return f"OK {generation}".encode()
        if verb == "LIST" and len(parts) == 1:
            attachment = self._require_attachment()
            paths = attachment.paths()
            listing = "\n".join(paths)
            return f"OK {attachment.generation} {len(paths)}\n{listing}".encode()
        raise ValueError(f"bad verb: {head!r}")


class StoreClient:
    """Client side: mounts an export and issues reads/writes.

    ``locate`` returns the store's current address (vip-resolved in two-tier
    mode, fixed in three-tier mode); the caller decides when to remount.
    """

    def __init__(self, fabric: Fabric, src: str, hostname: str, locate, timeout: float = 0.25):
        self.fabric = fabric
        self.src = src
        self.hostname = hostname
        self.locate = locate
        self.timeout = timeout
        self.binding: MountBinding | None = None
        self._addr: Address | None = None

    def _exchange(self, payload: bytes) -> bytes:
        if self._addr is None:
            self._addr = self.locate()
        return self.fabric.call(self.src, self._addr, payload, self.timeout)

    def invalidate(self) -> None:
        self.binding = None
        self._addr = None

    @staticmethod
    def _check_err(reply: bytes) -> None:
        if reply.startswith(b"ERR "):
            code = reply[4:].decode().strip()
            raise {
                "stale-binding": StaleBinding,
                "access-denied": AccessDenied,
                "no-such-export": NoSuchExport,
                "not-found": NotFound,
                "read-only": ReadOnlyExport,
            }.get(code, StaleBinding)(code)

    def mount(self, export_path: str) -> MountBinding:
        self._addr = None
        reply = self._exchange(f"MOUNT {self.hostname} {export_path}".encode())
        self._check_err(reply)
        token = reply.decode().split(" ", 1)[1]
        epoch = int(token.rsplit("@", 1)[1])
        self.binding = MountBinding(client=self.hostname, export_path=export_path,
                                    server_epoch=epoch)
        return self.binding

    def _require_binding(self) -> MountBinding:
        if self.binding is None:
            raise StaleBinding("not mounted")
        return self.binding

    def read(self, path: str) -> bytes:
        binding = self._require_binding()
        reply = self._exchange(f"READ {binding.token} {path}".encode())
        self._check_err(reply)
        head, _, body = reply.partition(b"\n")
        _ok, _gen, length = head.decode().split(" ")
        return body[: int(length)]

    def read_with_generation(self, path: str) -> tuple[int, bytes]:
        binding = self._require_binding()
        reply = self._exchange(f"READ {binding.token} {path}".encode())
        self._check_err(reply)
        head, _, body = reply.partition(b"\n")
        _ok, gen, length = head.decode().split(" ")
        return int(gen), body[: int(length)]

    def write(self, path: str, data: bytes) -> int:
        binding = self._require_binding()
        head = f"WRITE {binding.token} {path} {len(data)}\n".encode()
        reply = self._exchange(head + data)
        self._check_err(reply)
        return int(reply.decode().split(" ")[1])

    def list_paths(self) -> tuple[int, list[str]]:
        reply = self._exchange(b"LIST")
        self._check_err(reply)
        head, _, body = reply.partition(b"\n")
        _ok, gen, count = head.decode().split(" ")
        paths = body.decode().split("\n") if int(count) else []
        return int(gen), paths
