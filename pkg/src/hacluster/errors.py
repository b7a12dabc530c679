"""Exception taxonomy shared across the cluster components."""


class ClusterError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ClusterError):
    """Configuration file is malformed or violates an invariant."""


class UnknownSelf(ClusterError):
    """Local node name is not in the configured member list."""


class DuplicateOrdinal(ClusterError):
    """Two configured members share an ordinal."""


class UnknownMember(ClusterError):
    """Heartbeat received from a node outside the configured member set."""


class ResourceStartFailed(ClusterError):
    """A resource in the group failed to start; carries the resource kind."""

    def __init__(self, kind, reason=""):
        super().__init__(f"{kind} failed to start: {reason}" if reason else f"{kind} failed to start")
        self.kind = kind
        self.reason = reason


class TargetOffline(ClusterError):
    """Relocation target is not an online member."""


class StartFailedOnTarget(ClusterError):
    """Relocation target could not start the group."""


class FenceUnavailable(ClusterError):
    """The fencing authority cannot confirm the fence; takeover is blocked."""


class NoHealthyBackend(ClusterError):
    """Every backend in the pool is marked Down."""


class StaleBinding(ClusterError):
    """Store binding was issued under a superseded epoch; remount required."""


class AccessDenied(ClusterError):
    """Client hostname matches no export pattern."""


class NoSuchExport(ClusterError):
    """Requested export path is not in the export table."""


class ReadOnlyExport(ClusterError):
    """Write attempted through a read-only mount."""


class NotFound(ClusterError):
    """Path does not exist in the volume."""


class VolumeBusy(ClusterError):
    """Volume attach rejected: fencing for the previous epoch not confirmed."""


class VolumeMissing(ClusterError):
    """No volume with the requested id exists."""


class StaleEpoch(ClusterError):
    """Bind attempt with an epoch not newer than the current binding."""


class Unbound(ClusterError):
    """Virtual address has no current owner."""


class ScriptParseError(ClusterError):
    """Scenario script failed to parse; carries the line number."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
