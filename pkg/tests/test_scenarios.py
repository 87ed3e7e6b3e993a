import pytest

from superflow.errors import ScenarioError
from superflow.flows import PROTO_TCP, PROTO_UDP, TCP_SYN, ip_to_int
from superflow.scenarios import ScenarioSpec, generate_mix, generate_scenario, merge_streams, parse_hits


def test_parse_hits():
    assert parse_hits("all") == list(range(256))
    assert parse_hits("0-3,250") == [0, 1, 2, 3, 250]
    with pytest.raises(ScenarioError):
        parse_hits("10-300")
    with pytest.raises(ScenarioError):
        parse_hits("a-b")


@pytest.mark.parametrize("kind,params", [
    ("scan", {}),
    ("web", {"site_count": 5}),
    ("chat", {"message_count": 12}),
    ("noise", {"flow_count": 50}),
])
def test_same_seed_same_flows(kind, params):
    a = generate_scenario(ScenarioSpec(kind, params, seed=3))
    b = generate_scenario(ScenarioSpec(kind, params, seed=3))
    c = generate_scenario(ScenarioSpec(kind, params, seed=4))
    assert a == b
    assert a != c
    assert [f.t_start for f in a] == sorted(f.t_start for f in a)


def test_scan_shape():
    flows = generate_scenario(ScenarioSpec("scan", {"addresses_hit": "0-223", "window_s": 10, "t0_ms": 5000}, 1))
    assert len(flows) == 224
    assert sorted(f.dst_ip & 0xFF for f in flows) == list(range(224))
    assert {f.dst_ip >> 8 for f in flows} == {ip_to_int("192.168.1.0") >> 8}
    assert len({f.src_ip for f in flows}) == 1
    for f in flows:
        assert f.protocol == PROTO_TCP and f.tcp_flags == TCP_SYN and f.packet_count == 1
        assert f.byte_count in (40, 44, 60)
        assert 5000 <= f.t_start <= 15000


def test_scan_rejects_wider_prefix():
    with pytest.raises(ScenarioError):
        generate_scenario(ScenarioSpec("scan", {"target_prefix": "10.0.0.0/16"}))


def test_web_shape():
    flows = generate_scenario(ScenarioSpec("web", {"site_count": 36, "flows_per_site": 6}, 2))
    # one lookup per site on top of the content flows
    assert len(flows) == 36 * 7
    assert len({f.dst_ip for f in flows}) == 36
    dns = [f for f in flows if f.dst_port == 53]
    assert len(dns) == 36 and all(f.protocol == PROTO_UDP for f in dns)
    first_dns = {}
    for f in dns:
        first_dns.setdefault(f.dst_ip, f.t_start)
    for f in flows:
        if f.dst_port != 53:
            assert 1 <= f.t_start - first_dns[f.dst_ip] <= 500


def test_chat_alternates_direction():
    flows = generate_scenario(ScenarioSpec("chat", {"message_count": 10, "max_payload": 200}, 0))
    pairs = [(f.src_ip, f.dst_ip) for f in flows]
    assert len(set(pairs)) == 2
    assert all(a != b for a, b in zip(pairs, pairs[1:]))
    assert all(1 <= f.byte_count <= 200 for f in flows)


def test_bad_parameters():
    with pytest.raises(ScenarioError):
        generate_scenario(ScenarioSpec("web", {"site_count": 0}))
    with pytest.raises(ScenarioError):
        generate_scenario(ScenarioSpec("nonsense"))
    with pytest.raises(ScenarioError):
        generate_scenario(ScenarioSpec("scan", {"scanner_ip": "not-an-ip"}))


def test_mix_is_time_ordered_union():
    specs = [ScenarioSpec("scan", {}, 1), ScenarioSpec("noise", {"flow_count": 40}, 2)]
    mixed = generate_mix(specs)
    assert len(mixed) == 256 + 40
    assert sorted(mixed, key=lambda f: f.t_start) == mixed
    assert merge_streams(*(generate_scenario(s) for s in specs)) == mixed
