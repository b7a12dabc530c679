"""Minimal HTTP/1.1 framing: just enough to proxy one exchange per connection.

The proxy path must preserve upstream bytes exactly (headers other than the
cookie it inserts are passed through untouched), so responses are handled as
raw byte blobs with small splice helpers rather than re-serialized objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

CRLF = b"\r\n"
HEAD_END = b"\r\n\r\n"


@dataclass
class Request:
    method: str
    path: str
    headers: list[tuple[str, str]] = field(default_factory=list)
    body: bytes = b""

    def header(self, name: str) -> str | None:
        lname = name.lower()
        for k, v in self.headers:
            if k.lower() == lname:
                return v
        return None

    def cookies(self) -> dict[str, str]:
        raw = self.header("Cookie")
        if not raw:
            return {}
        out = {}
        for part in raw.split(";"):
            if "=" in part:
                k, _, v = part.strip().partition("=")
                out[k] = v
        return out


@dataclass
class Response:
    status: int
    reason: str
    headers: list[tuple[str, str]] = field(default_factory=list)
    body: bytes = b""

    def header(self, name: str) -> str | None:
        lname = name.lower()
        for k, v in self.headers:
            if k.lower() == lname:
                return v
        return None

    def header_values(self, name: str) -> list[str]:
        lname = name.lower()
        return [v for k, v in self.headers if k.lower() == lname]


def serialize_request(req: Request) -> bytes:
    lines = [f"{req.method} {req.path} HTTP/1.1".encode()]
    lines += [f"{k}: {v}".encode() for k, v in req.headers]
    return CRLF.join(lines) + HEAD_END + req.body


def serialize_response(resp: Response) -> bytes:
    lines = [f"HTTP/1.1 {resp.status} {resp.reason}".encode()]
    lines += [f"{k}: {v}".encode() for k, v in resp.headers]
    return CRLF.join(lines) + HEAD_END + resp.body


def _split_head(raw: bytes) -> tuple[list[bytes], bytes]:
    idx = raw.find(HEAD_END)
    if idx < 0:
        raise ValueError("incomplete HTTP message: no header terminator")
    head = raw[:idx].split(CRLF)
    return head, raw[idx + len(HEAD_END):]


def _parse_headers(lines: list[bytes]) -> list[tuple[str, str]]:
    headers = []
    for line in lines:
        k, _, v = line.decode("latin-1").partition(":")
        headers.append((k.strip(), v.strip()))
    return headers


def parse_request(raw: bytes) -> Request:
    head, body = _split_head(raw)
    parts = head[0].decode("latin-1").split(" ")
    if len(parts) != 3:
        raise ValueError(f"bad request line: {head[0]!r}")
    method, path, _version = parts
    return Request(method=method, path=path, headers=_parse_headers(head[1:]), body=body)


def parse_response(raw: bytes) -> Response:
    head, body = _split_head(raw)
    parts = head[0].decode("latin-1").split(" ", 2)
    if len(parts) < 2:
        raise ValueError(f"bad status line: {head[0]!r}")
    status = int(parts[1])
    reason = parts[2] if len(parts) == 3 else ""
    return Response(status=status, reason=reason, headers=_parse_headers(head[1:]), body=body)


def insert_header(raw: bytes, name: str, value: str) -> bytes:
    """Splice one header line into a raw message without touching anything else."""
    idx = raw.find(HEAD_END)
    if idx < 0:
        raise ValueError("incomplete HTTP message: no header terminator")
    return raw[:idx] + CRLF + f"{name}: {value}".encode() + raw[idx:]


def content_length(head_lines: list[bytes]) -> int:
    for line in head_lines[1:]:
        k, _, v = line.decode("latin-1").partition(":")
        if k.strip().lower() == "content-length":
            try:
                return int(v.strip())
            except ValueError:
                return 0
    return 0


def read_http_message(read_fn) -> bytes:
    """Read one HTTP message from a blocking byte source.

    ``read_fn(n)`` returns up to n bytes, b"" at EOF.  Honors Content-Length;
    a HEAD/GET exchange with Connection: close also terminates at EOF.
    """
    buf = b""
    while HEAD_END not in buf:
        chunk = read_fn(4096)
        if not chunk:
            if buf:
                raise ValueError("connection closed mid-headers")
            return b""
        buf += chunk
    idx = buf.find(HEAD_END)
    head = buf[:idx].split(CRLF)
    want = idx + len(HEAD_END) + content_length(head)
    while len(buf) < want:
        chunk = read_fn(4096)
        if not chunk:
            break
        buf += chunk
    return buf[:want]
