"""Miniature two-tier high-availability cluster.

A pair of load-balancer nodes form an active/standby quorate cluster and
embed the shared-content store, fronting up to 16 web backends through a
single virtual endpoint with round-robin dispatch and SERVERID cookie
persistence.  Everything runs either over real loopback sockets or inside
a deterministic in-process network simulation with fault injection.
"""

__version__ = "0.1.0"
