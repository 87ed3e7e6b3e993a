"""Per-hypothesis summaries of a superflow's member flows."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .flows import PROTO_TCP, PROTO_UDP, FlowRecord

# destination port and transport merged into one byte
SERVICE_CODES = {
    (PROTO_UDP, 53): 1,
    (PROTO_UDP, 443): 2,
    (PROTO_TCP, 443): 3,
    (PROTO_TCP, 80): 4,
    (PROTO_TCP, 8080): 5,
}


def service_code(protocol: int, port: int) -> int:
    return SERVICE_CODES.get((protocol, port), 0)


@dataclass(frozen=True)
class ScanSummary:
    src_ip: int
    prefix: int          # network address of the /24 holding every probed address
    bitmap: int          # bit ``a`` set when address ``.a`` was probed
    t_start: int
    t_end: int
    byte_count: int
    packet_count: int
    tcp_flags: int
    single_prefix: bool  # False when members spread over several /24s or sources

    @property
    def hit_count(self) -> int:
        return bin(self.bitmap).count("1")

    def hits(self) -> list[int]:
        return [a for a in range(256) if self.bitmap >> a & 1]


@dataclass(frozen=True)
class SiteEntry:
    dst_ip: int
    service_code: int
    flow_count: int
    total_bytes: int
    total_packets: int
    first_seen_offset_s: int


@dataclass(frozen=True)
class WebSummary:
    client_ip: int
    t_start: int
    t_end: int
    entries: tuple

    @property
    def dcount(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class ChatSummary:
    peer_a: int
    peer_b: int
    flows_ab: int
    flows_ba: int
    t_start: int
    t_end: int
    byte_count: int
    packet_count: int


@dataclass(frozen=True)
class GenericSummary:
    """Fallback: the members folded into one flow-shaped record."""
    anchor: FlowRecord
    flow_count: int
    t_start: int
    t_end: int
    byte_count: int
    packet_count: int
    tcp_flags: int


def summarize_scan(members: Sequence[FlowRecord]) -> ScanSummary:
    first = members[0]
    prefix = first.dst_ip & 0xFFFFFF00
    bitmap = 0
    single = True
    flags = 0
    for f in members:
        if f.dst_ip & 0xFFFFFF00 != prefix or f.src_ip != first.src_ip:
            single = False
        bitmap |= 1 << (f.dst_ip & 0xFF)
        flags |= f.tcp_flags
    return ScanSummary(
        src_ip=first.src_ip,
        prefix=prefix,
        bitmap=bitmap,
        t_start=min(f.t_start for f in members),
        t_end=max(f.t_end for f in members),
        byte_count=sum(f.byte_count for f in members),
        packet_count=sum(f.packet_count for f in members),
        tcp_flags=flags,
        single_prefix=single,
    )


def summarize_web(members: Sequence[FlowRecord]) -> WebSummary:
    t_start = min(f.t_start for f in members)
    clients = Counter(f.src_ip for f in members)
    client = min(clients, key=lambda ip: (-clients[ip], ip))
    by_dst: dict[int, list[FlowRecord]] = {}
    for f in members:
        by_dst.setdefault(f.dst_ip, []).append(f)

    entries = []
    for dst, flows in by_dst.items():
        codes = Counter(service_code(f.protocol, f.dst_port) for f in flows)
        # prefer the content service over the lookup that preceded it
        content = {c: n for c, n in codes.items() if c != 1} or codes
        code = min(content, key=lambda c: (-content[c], c))
        entries.append(SiteEntry(
            dst_ip=dst,
            service_code=code,
            flow_count=len(flows),
            total_bytes=sum(f.byte_count for f in flows),
            total_packets=sum(f.packet_count for f in flows),
            first_seen_offset_s=(min(f.t_start for f in flows) - t_start) // 1000,
        ))
    entries.sort(key=lambda e: (e.first_seen_offset_s, e.dst_ip))
    return WebSummary(client, t_start, max(f.t_end for f in members), tuple(entries))


def summarize_chat(members: Sequence[FlowRecord]) -> ChatSummary:
    first = members[0]
    a, b = first.src_ip, first.dst_ip
    ab = sum(1 for f in members if f.src_ip == a and f.dst_ip == b)
    return ChatSummary(
        peer_a=a, peer_b=b, flows_ab=ab, flows_ba=len(members) - ab,
        t_start=min(f.t_start for f in members),
        t_end=max(f.t_end for f in members),
        byte_count=sum(f.byte_count for f in members),
        packet_count=sum(f.packet_count for f in members),
    )


def summarize_generic(members: Sequence[FlowRecord]) -> GenericSummary:
    flags = 0
    for f in members:
        flags |= f.tcp_flags
    return GenericSummary(
        anchor=members[0],
        flow_count=len(members),
        t_start=min(f.t_start for f in members),
        t_end=max(f.t_end for f in members),
        byte_count=sum(f.byte_count for f in members),
        packet_count=sum(f.packet_count for f in members),
        tcp_flags=flags,
    )


SUMMARIZERS = {
    "scan": summarize_scan,
    "web": summarize_web,
    "chat": summarize_chat,
    "generic": summarize_generic,
}
