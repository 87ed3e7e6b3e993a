"""Deterministic synthetic traffic: scans, web page fetches, chats and noise.

Every generator draws from a private ``random.Random(seed)`` so the same
``ScenarioSpec`` always produces the same records. No clock is read.
"""

from __future__ import annotations

import ipaddress
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .errors import ScenarioError
from .flows import (
    PROTO_ICMP, PROTO_TCP, PROTO_UDP, TCP_ACK, TCP_PSH, TCP_RST, TCP_SYN,
    FlowRecord, ip_to_int,
)

DEFAULT_T0_MS = 1_700_000_000_000
KINDS = ("scan", "web", "chat", "noise")


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0


def parse_hits(text: str) -> list[int]:
    """Parse ``all`` or a list of ranges such as ``0-223,250`` into last octets."""
    text = text.strip()
    if text == "all":
        return list(range(256))
    hits: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            a = int(lo)
            b = int(hi) if sep else a
        except ValueError:
            raise ScenarioError(f"bad address range {part!r}") from None
        if not 0 <= a <= b <= 255:
            raise ScenarioError(f"address range {part!r} outside 0-255")
        hits.update(range(a, b + 1))
    return sorted(hits)


def _ip(value, name) -> int:
    try:
        return value if isinstance(value, int) else ip_to_int(value)
    except ValueError:
        raise ScenarioError(f"{name}: not an IPv4 address: {value!r}") from None


def _network(value, name) -> ipaddress.IPv4Network:
    try:
        return ipaddress.IPv4Network(value, strict=False)
    except ValueError:
        raise ScenarioError(f"{name}: not an IPv4 prefix: {value!r}") from None


def _positive(params, name, default=None, minimum=1):
    value = params.get(name, default)
    if value is None:
        raise ScenarioError(f"missing parameter {name!r}")
    if not isinstance(value, int) or value < minimum:
        raise ScenarioError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def generate_scenario(spec: ScenarioSpec) -> list[FlowRecord]:
    """Generate the flows of one scenario, sorted by start time."""
    try:
        gen = _GENERATORS[spec.kind]
    except KeyError:
        raise ScenarioError(f"unknown scenario kind {spec.kind!r}; expected one of {KINDS}") from None
    rng = random.Random(spec.seed)
    flows = gen(dict(spec.params), rng)
    flows.sort(key=lambda r: r.t_start)
    return flows


def _scan(p: dict, rng: random.Random) -> list[FlowRecord]:
    scanner = _ip(p.get("scanner_ip", "203.0.113.7"), "scanner_ip")
    prefix = _network(p.get("target_prefix", "192.168.1.0/24"), "target_prefix")
    if prefix.prefixlen != 24:
        raise ScenarioError("target_prefix must be a /24")
    hits = p.get("addresses_hit", "all")
    if isinstance(hits, str):
        hits = parse_hits(hits)
    hits = sorted(set(hits))
    if not hits:
        raise ScenarioError("addresses_hit must not be empty")
    if hits[0] < 0 or hits[-1] > 255:
        raise ScenarioError("addresses_hit must lie within 0-255")
    window_ms = int(p.get("window_s", 10) * 1000)
    if window_ms < 0:
        raise ScenarioError("window_s must be non-negative")
    t0 = p.get("t0_ms", DEFAULT_T0_MS)
    dport = p.get("dst_port", 22)
    base = int(prefix.network_address)

    flows = []
    order = list(hits)
    rng.shuffle(order)
    for octet in order:
        ts = t0 + rng.randint(0, window_ms)
        flows.append(FlowRecord(
            scanner, base + octet, rng.randint(1024, 65535), dport, PROTO_TCP, TCP_SYN,
            ts, ts + rng.randint(0, 3), rng.choice((40, 44, 60)), 1,
        ))
    return flows


_WEB_SERVICES = ((PROTO_TCP, 443), (PROTO_TCP, 443), (PROTO_TCP, 443), (PROTO_TCP, 80),
                 (PROTO_UDP, 443), (PROTO_TCP, 80))


def _web(p: dict, rng: random.Random) -> list[FlowRecord]:
    client = _ip(p.get("client_ip", "10.1.2.3"), "client_ip")
    site_count = _positive(p, "site_count")
    per_site = _positive(p, "flows_per_site", 1)
    lead = _positive(p, "dns_lead_ms", 500)
    resolver = p.get("resolver_ip")
    resolver = None if resolver is None else _ip(resolver, "resolver_ip")
    pool = _network(p.get("site_pool", "198.18.0.0/15"), "site_pool")
    if site_count > pool.num_addresses:
        raise ScenarioError("site_pool too small for site_count")
    t0 = p.get("t0_ms", DEFAULT_T0_MS)

    base = int(pool.network_address)
    sites: list[int] = []
    seen = {client, resolver}
    while len(sites) < site_count:
        addr = base + rng.randrange(pool.num_addresses)
        if addr not in seen:
            seen.add(addr)
            sites.append(addr)

    flows = []
    t = t0
    for site in sites:
        # A site answers its own lookup unless a shared resolver is configured.
        dns_dst = site if resolver is None else resolver
        flows.append(FlowRecord(
            client, dns_dst, rng.randint(1024, 65535), 53, PROTO_UDP, 0,
            t, t + rng.randint(1, 30), rng.randint(60, 120), 1,
        ))
        for _ in range(per_site):
            proto, port = rng.choice(_WEB_SERVICES)
            ts = t + rng.randint(1, lead)
            nbytes = rng.randint(500, 200_000)
            flows.append(FlowRecord(
                client, site, rng.randint(1024, 65535), port, proto,
                TCP_SYN if proto == PROTO_TCP else 0,
                ts, ts + rng.randint(5, 4000), nbytes, nbytes // 1200 + 1,
            ))
        t += rng.randint(20, 400)
    return flows


def _chat(p: dict, rng: random.Random) -> list[FlowRecord]:
    a = _ip(p.get("peer_a", "10.0.0.1"), "peer_a")
    b = _ip(p.get("peer_b", "10.0.0.2"), "peer_b")
    count = _positive(p, "message_count")
    max_payload = _positive(p, "max_payload", 1400)
    proto = p.get("protocol", PROTO_TCP)
    port = p.get("port", 5222)
    t = p.get("t0_ms", DEFAULT_T0_MS)
    port_a, port_b = rng.randint(1024, 65535), rng.randint(1024, 65535)

    flows = []
    for i in range(count):
        if i % 2 == 0:
            src, dst, sport, dport = a, b, port_a, port
        else:
            src, dst, sport, dport = b, a, port_b, port
        flags = TCP_PSH | TCP_ACK if proto == PROTO_TCP else 0
        flows.append(FlowRecord(
            src, dst, sport, dport, proto, flags,
            t, t + rng.randint(0, 50), rng.randint(1, max_payload), 1,
        ))
        t += rng.randint(200, 3000)
    return flows


def _noise(p: dict, rng: random.Random) -> list[FlowRecord]:
    count = _positive(p, "flow_count", minimum=0)
    src_pool = _network(p.get("ip_pool", "10.0.0.0/8"), "ip_pool")
    dst_pool = _network(p.get("dst_pool", str(src_pool)), "dst_pool")
    span_ms = int(p.get("duration_s", 3600) * 1000)
    t0 = p.get("t0_ms", DEFAULT_T0_MS)
    src_base, src_n = int(src_pool.network_address), src_pool.num_addresses
    dst_base, dst_n = int(dst_pool.network_address), dst_pool.num_addresses

    flows = []
    randrange, randint, rand = rng.randrange, rng.randint, rng.random
    for _ in range(count):
        x = rand()
        if x < 0.7:
            proto, dport = PROTO_TCP, rng.choice((22, 23, 80, 443, 445, 3389, 8080))
            flags = rng.choice((TCP_SYN, TCP_ACK, TCP_SYN | TCP_ACK, TCP_PSH | TCP_ACK, TCP_RST))
            sport = randint(1024, 65535)
        elif x < 0.95:
            proto, dport, flags = PROTO_UDP, rng.choice((53, 123, 161, 443, 1900)), 0
            sport = randint(1024, 65535)
        else:
            proto, dport, sport, flags = PROTO_ICMP, 0, 0, 0
        packets = randint(1, 20)
        ts = t0 + randrange(span_ms + 1)
        flows.append(FlowRecord(
            src_base + randrange(src_n), dst_base + randrange(dst_n), sport, dport,
            proto, flags, ts, ts + randint(0, 5000), packets * randint(40, 1500), packets,
        ))
    return flows


_GENERATORS = {"scan": _scan, "web": _web, "chat": _chat, "noise": _noise}


def merge_streams(*streams: Iterable[FlowRecord]) -> list[FlowRecord]:
    """Interleave several flow sequences by start time (stable on ties)."""
    merged = [r for s in streams for r in s]
    merged.sort(key=lambda r: r.t_start)
    return merged


def generate_mix(specs: Sequence[ScenarioSpec]) -> list[FlowRecord]:
    return merge_streams(*(generate_scenario(s) for s in specs))
