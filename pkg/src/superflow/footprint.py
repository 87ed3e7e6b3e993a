"""On-disk size accounting and fixed-layout superflow records.

All records are big-endian with fixed offsets:

scan-256 (32 bytes)
    src_ip(4) prefix(4) t_start_s(4) t_end_s(4) bytes(4) packets(4)
    flags(1) kind(1) hit_count(2) reserved(4)
allotted scan-256 (64 bytes)
    the 32-byte scan-256 layout with kind=2, followed by a 256-bit map of
    probed addresses: address ``.a`` is bit ``0x80 >> (a % 8)`` of byte ``a // 8``
web (16 + 16 * dcount bytes)
    header: client_ip(4) t_start_s(4) duration_s(2) dcount(2) flags(1) reserved(3)
    per site: dst_ip(4) service_code(1) flow_count(1) total_bytes(4)
    total_packets(2) first_seen_offset_s(4)
chat (32 bytes)
    peer_a(4) peer_b(4) t_start_s(4) t_end_s(4) flows_ab(4) flows_ba(4) bytes(4) packets(4)

Counters that overflow their field saturate.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .decompose import Decomposition
from .errors import EncodingError
from .flows import FlowRecord, encode_compact
from .summaries import ChatSummary, GenericSummary, ScanSummary, WebSummary

MODES = ("per-flow", "per-destination")


@dataclass(frozen=True)
class SizeModel:
    netflow_v5_record: int = 48
    compact_record: int = 32
    web_header: int = 16
    web_site_entry: int = 16
    scan256_record: int = 32
    allotted_scan256_record: int = 64


SIZES = SizeModel()

FULL_SCAN_HITS = 256
ALLOTMENT = 32

SCAN_KIND_FULL = 1
SCAN_KIND_ALLOTTED = 2

_SCAN = struct.Struct(">IIIIIIBBHI")
_WEB_HEADER = struct.Struct(">IIHHB3x")
_WEB_ENTRY = struct.Struct(">IBBIHI")
_CHAT = struct.Struct(">IIIIIIII")
assert _SCAN.size == SIZES.scan256_record
assert _WEB_HEADER.size == SIZES.web_header and _WEB_ENTRY.size == SIZES.web_site_entry
assert _CHAT.size == SIZES.compact_record


def _sat(value: int, bits: int) -> int:
    top = (1 << bits) - 1
    return value if value <= top else top


def web_superflow_size(dcount: int) -> int:
    if dcount < 1:
        raise ValueError("a web superflow covers at least one destination")
    return SIZES.web_header + SIZES.web_site_entry * dcount


def flow_footprint(flows: Iterable[FlowRecord], mode: str = "per-flow") -> int:
    """Bytes needed to store ``flows`` as 32-byte records.

    ``per-destination`` charges one record per distinct destination address,
    which suits phenomena such as a web-page fetch that touch each site several times.
    """
    if mode == "per-flow":
        return SIZES.compact_record * sum(1 for _ in flows)
    if mode == "per-destination":
        return SIZES.compact_record * len({f.dst_ip for f in flows})
    raise ValueError(f"unknown accounting mode {mode!r}; expected one of {MODES}")


def _scan_base(s: ScanSummary, kind: int) -> bytes:
    return _SCAN.pack(
        s.src_ip, s.prefix, _sat(s.t_start // 1000, 32), _sat(s.t_end // 1000, 32),
        _sat(s.byte_count, 32), _sat(s.packet_count, 32), s.tcp_flags & 0xFF, kind, s.hit_count, 0,
    )


def _check_scan(s: ScanSummary, lo: int, hi: int, name: str) -> None:
    if not s.single_prefix:
        raise EncodingError(f"{name} needs one source and one /24")
    if not lo <= s.hit_count <= hi:
        raise EncodingError(f"{name} needs {lo}-{hi} probed addresses, got {s.hit_count}")


def encode_scan256(s: ScanSummary) -> bytes:
    _check_scan(s, FULL_SCAN_HITS, FULL_SCAN_HITS, "scan-256")
    return _scan_base(s, SCAN_KIND_FULL)


def hit_bitmap(s: ScanSummary) -> bytes:
    out = bytearray(32)
    for a in s.hits():
        out[a >> 3] |= 0x80 >> (a & 7)
    return bytes(out)


def encode_allotted_scan256(s: ScanSummary) -> bytes:
    _check_scan(s, FULL_SCAN_HITS - ALLOTMENT, FULL_SCAN_HITS, "allotted scan-256")
    return _scan_base(s, SCAN_KIND_ALLOTTED) + hit_bitmap(s)


def encode_web_superflow(s: WebSummary) -> bytes:
    if not s.entries:
        raise EncodingError("web superflow without destinations")
    if s.dcount > 0xFFFF:
        raise EncodingError("web superflow has too many destinations for a 16-bit dcount")
    parts = [_WEB_HEADER.pack(
        s.client_ip, _sat(s.t_start // 1000, 32),
        _sat((s.t_end - s.t_start) // 1000, 16), s.dcount, 0,
    )]
    for e in s.entries:
        parts.append(_WEB_ENTRY.pack(
            e.dst_ip, e.service_code, _sat(e.flow_count, 8), _sat(e.total_bytes, 32),
            _sat(e.total_packets, 16), _sat(e.first_seen_offset_s, 32),
        ))
    return b"".join(parts)


def encode_chat(s: ChatSummary) -> bytes:
    return _CHAT.pack(
        s.peer_a, s.peer_b, _sat(s.t_start // 1000, 32), _sat(s.t_end // 1000, 32),
        _sat(s.flows_ab, 32), _sat(s.flows_ba, 32), _sat(s.byte_count, 32), _sat(s.packet_count, 32),
    )


def encode_generic(s: GenericSummary) -> bytes:
    a = s.anchor
    folded = FlowRecord(a.src_ip, a.dst_ip, a.src_port, a.dst_port, a.protocol, s.tcp_flags & 0xFF,
                        s.t_start, s.t_end, s.byte_count, s.packet_count)
    return encode_compact(folded)


def encode_superflow(summary) -> Optional[bytes]:
    """Smallest record for a summary, or None when no layout fits it."""
    if isinstance(summary, ScanSummary):
        if not summary.single_prefix:
            return None
        if summary.hit_count == FULL_SCAN_HITS:
            return encode_scan256(summary)
        if summary.hit_count >= FULL_SCAN_HITS - ALLOTMENT:
            return encode_allotted_scan256(summary)
        return None
    if isinstance(summary, WebSummary):
        return encode_web_superflow(summary)
    if isinstance(summary, ChatSummary):
        return encode_chat(summary)
    if isinstance(summary, GenericSummary):
        return encode_generic(summary)
    raise TypeError(f"no record layout for {type(summary).__name__}")


@dataclass
class FootprintReport:
    original_bytes: int
    superflow_bytes: int
    residual_bytes: int
    mode: str
    superflows: int = 0
    replaced_flows: int = 0
    unencodable: int = 0
    breakdown: dict = field(default_factory=dict)

    @property
    def total_after(self) -> int:
        return self.superflow_bytes + self.residual_bytes

    @property
    def reduction_fraction(self) -> float:
        if not self.original_bytes:
            return 0.0
        return 1 - self.total_after / self.original_bytes

    @property
    def savings(self) -> int:
        return self.original_bytes - self.total_after

    def to_kv(self) -> str:
        lines = [
            f"mode={self.mode}",
            f"original_bytes={self.original_bytes}",
            f"superflow_bytes={self.superflow_bytes}",
            f"residual_bytes={self.residual_bytes}",
            f"total_after={self.total_after}",
            f"superflows={self.superflows}",
            f"replaced_flows={self.replaced_flows}",
            f"unencodable={self.unencodable}",
            f"reduction={self.reduction_fraction:.4f}",
        ]
        for hyp, row in sorted(self.breakdown.items()):
            lines.append(f"{hyp}.superflows={row['superflows']}")
            lines.append(f"{hyp}.superflow_bytes={row['superflow_bytes']}")
            lines.append(f"{hyp}.replaced_flows={row['replaced_flows']}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        rows = [
            ("accounting mode", self.mode),
            ("original bytes", self.original_bytes),
            ("superflows", self.superflows),
            ("flows replaced", self.replaced_flows),
            ("superflow bytes", self.superflow_bytes),
            ("residual bytes", self.residual_bytes),
            ("total after", self.total_after),
            ("reduction", f"{100 * self.reduction_fraction:.2f}%"),
        ]
        if self.unencodable:
            rows.insert(3, ("unencodable superflows", self.unencodable))
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value:>12}" for name, value in rows) + "\n"


def footprint_report(d: Decomposition, flows: Sequence[FlowRecord], mode: str = "per-flow") -> FootprintReport:
    """Footprint before and after replacing each encodable superflow by its record.

    Superflows with no fitting record layout keep their member flows.
    """
    flows = list(flows)
    residual = [flows[i] for i in d.rest_indices]
    report = FootprintReport(flow_footprint(flows, mode), 0, 0, mode)
    for sf in d.superflows:
        if sf.summary is None:
            raise ValueError("superflow has no summary; call attach_summaries first")
        record = encode_superflow(sf.summary)
        if record is None:
            report.unencodable += 1
            residual.extend(flows[i] for i in sf.member_indices)
            continue
        row = report.breakdown.setdefault(sf.hypothesis_id, {"superflows": 0, "superflow_bytes": 0, "replaced_flows": 0})
        row["superflows"] += 1
        row["superflow_bytes"] += len(record)
        row["replaced_flows"] += len(sf.member_indices)
        report.superflows += 1
        report.replaced_flows += len(sf.member_indices)
        report.superflow_bytes += len(record)
    report.residual_bytes = flow_footprint(residual, mode)
    return report
