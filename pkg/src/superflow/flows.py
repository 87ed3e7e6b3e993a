"""Flow records and their CSV / 32-byte compact serializations."""

from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass, replace
from typing import BinaryIO, Iterable, Iterator, TextIO

from .errors import FlowFormatError, FlowParseError

CSV_COLUMNS = (
    "srcip", "dstip", "srcport", "dstport", "proto",
    "tcpflags", "tstart_ms", "tend_ms", "bytes", "packets",
)
CSV_HEADER = ",".join(CSV_COLUMNS)

COMPACT_SIZE = 32
# src dst sport dport proto flags tstart_s tend_s bytes packets reserved
_COMPACT = struct.Struct(">IIHHBBIIIIH")
assert _COMPACT.size == COMPACT_SIZE

U32_MAX = 0xFFFFFFFF

PROTO_ICMP = 1
PROTO_TCP = 6
PROTO_UDP = 17

TCP_FIN = 0x01
TCP_SYN = 0x02
TCP_RST = 0x04
TCP_PSH = 0x08
TCP_ACK = 0x10


def ip_to_int(text: str) -> int:
    return int(ipaddress.IPv4Address(text.strip()))


def int_to_ip(value: int) -> str:
    return str(ipaddress.IPv4Address(value))


@dataclass(frozen=True, slots=True)
class FlowRecord:
    """One unidirectional flow summary.

    Addresses are held as 32-bit integers and timestamps as milliseconds
    since the epoch. String addresses are accepted and converted.
    """

    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int
    protocol: int
    tcp_flags: int
    t_start: int
    t_end: int
    byte_count: int
    packet_count: int

    def __post_init__(self):
        if isinstance(self.src_ip, str):
            object.__setattr__(self, "src_ip", ip_to_int(self.src_ip))
        if isinstance(self.dst_ip, str):
            object.__setattr__(self, "dst_ip", ip_to_int(self.dst_ip))
        if not 0 <= self.src_ip <= U32_MAX or not 0 <= self.dst_ip <= U32_MAX:
            raise ValueError("IPv4 address out of range")
        if not 0 <= self.src_port <= 0xFFFF or not 0 <= self.dst_port <= 0xFFFF:
            raise ValueError("port out of range")
        if not 0 <= self.protocol <= 0xFF:
            raise ValueError(f"protocol out of range: {self.protocol}")
        if not 0 <= self.tcp_flags <= 0xFF:
            raise ValueError(f"tcp_flags out of range: {self.tcp_flags}")
        if self.t_start < 0:
            raise ValueError("t_start must be non-negative")
        if self.t_end < self.t_start:
            raise ValueError("t_end precedes t_start")
        if self.byte_count < 0 or self.packet_count < 0:
            raise ValueError("counters must be non-negative")

    @property
    def src(self) -> str:
        return int_to_ip(self.src_ip)

    @property
    def dst(self) -> str:
        return int_to_ip(self.dst_ip)

    @property
    def duration_ms(self) -> int:
        return self.t_end - self.t_start


def parse_flow_csv(line: str, line_no: int | None = None) -> FlowRecord:
    """Parse one CSV line in ``CSV_COLUMNS`` order."""
    fields = [part.strip() for part in line.strip().split(",")]
    if len(fields) != len(CSV_COLUMNS):
        raise FlowParseError(
            f"expected {len(CSV_COLUMNS)} columns, got {len(fields)}", line_no)

    values = []
    for col, (name, text) in enumerate(zip(CSV_COLUMNS, fields), start=1):
        try:
            if col <= 2:
                values.append(ip_to_int(text))
            else:
                if not text.isdigit():
                    raise ValueError(text)
                values.append(int(text))
        except ValueError:
            raise FlowParseError(f"bad value {text!r} for {name}", line_no, col) from None

    sport, dport, proto, flags = values[2:6]
    for col, value, limit in ((3, sport, 0xFFFF), (4, dport, 0xFFFF), (5, proto, 0xFF), (6, flags, 0xFF)):
        if value > limit:
            raise FlowParseError(f"{CSV_COLUMNS[col - 1]} out of range: {value}", line_no, col)
    t_start, t_end, nbytes, npackets = values[6:]
    if t_end < t_start:
        raise FlowParseError("tend_ms precedes tstart_ms", line_no, 8)
    if npackets < 1:
        raise FlowParseError("a flow carries at least one packet", line_no, 10)
    if nbytes < npackets:
        raise FlowParseError("byte count smaller than packet count", line_no, 9)
    return FlowRecord(*values)


def format_flow_csv(r: FlowRecord) -> str:
    return (f"{int_to_ip(r.src_ip)},{int_to_ip(r.dst_ip)},{r.src_port},{r.dst_port},"
            f"{r.protocol},{r.tcp_flags},{r.t_start},{r.t_end},{r.byte_count},{r.packet_count}")


def _is_header(line: str) -> bool:
    first = line.split(",", 1)[0].strip()
    return not first[:1].isdigit()


def _sat32(value: int) -> int:
    return value if value <= U32_MAX else U32_MAX


def truncate(r: FlowRecord) -> FlowRecord:
    """Apply the lossy steps of the compact layout: whole seconds, 32-bit counters."""
    return replace(
        r,
        t_start=_sat32(r.t_start // 1000) * 1000,
        t_end=_sat32(r.t_end // 1000) * 1000,
        byte_count=_sat32(r.byte_count),
        packet_count=_sat32(r.packet_count),
    )


def encode_compact(r: FlowRecord) -> bytes:
    return _COMPACT.pack(
        r.src_ip, r.dst_ip, r.src_port, r.dst_port, r.protocol, r.tcp_flags,
        _sat32(r.t_start // 1000), _sat32(r.t_end // 1000),
        _sat32(r.byte_count), _sat32(r.packet_count), 0,
    )


def decode_compact(buf: bytes) -> FlowRecord:
    if len(buf) != COMPACT_SIZE:
        raise FlowFormatError(f"compact record must be {COMPACT_SIZE} bytes, got {len(buf)}")
    (src, dst, sport, dport, proto, flags,
     ts, te, nbytes, npackets, reserved) = _COMPACT.unpack(buf)
    if reserved:
        raise FlowFormatError("reserved bytes of compact record are not zero")
    if te < ts:
        raise FlowFormatError("compact record ends before it starts")
    return FlowRecord(src, dst, sport, dport, proto, flags, ts * 1000, te * 1000, nbytes, npackets)


def read_flow_stream(source: BinaryIO, format: str = "csv") -> Iterator[FlowRecord]:
    """Yield records from a binary stream, one at a time, in file order."""
    if format == "csv":
        yield from _read_csv(source)
    elif format == "compact":
        yield from _read_compact(source)
    else:
        raise ValueError(f"unknown flow format: {format!r}")


def _read_csv(source: BinaryIO) -> Iterator[FlowRecord]:
    seen_content = False
    for line_no, raw in enumerate(source, start=1):
        try:
            line = raw.decode("ascii") if isinstance(raw, bytes) else raw
        except UnicodeDecodeError:
            raise FlowParseError("non-ASCII input", line_no) from None
        if not line.strip():
            continue
        if not seen_content:
            seen_content = True
            if _is_header(line):
                continue
        yield parse_flow_csv(line, line_no)


def _read_compact(source: BinaryIO) -> Iterator[FlowRecord]:
    offset = 0
    while True:
        chunk = source.read(COMPACT_SIZE)
        if not chunk:
            return
        while len(chunk) < COMPACT_SIZE:
            more = source.read(COMPACT_SIZE - len(chunk))
            if not more:
                raise FlowFormatError(
                    f"truncated compact record at byte offset {offset} ({len(chunk)} bytes)")
            chunk += more
        try:
            yield decode_compact(chunk)
        except FlowFormatError as exc:
            raise FlowFormatError(f"record {offset // COMPACT_SIZE} (byte offset {offset}): {exc}") from None
        offset += COMPACT_SIZE


def write_flow_csv(flows: Iterable[FlowRecord], out: TextIO, header: bool = True) -> None:
    if header:
        out.write(CSV_HEADER + "\n")
    for r in flows:
        out.write(format_flow_csv(r) + "\n")


def write_compact(flows: Iterable[FlowRecord], out: BinaryIO) -> None:
    for r in flows:
        out.write(encode_compact(r))
