from superflow.flows import FlowRecord
from superflow.hypothesis import builtin_chat, builtin_scan, builtin_web, evaluate, parse_hypothesis


def flow(src, dst, dport=22, t=0, nbytes=40, proto=6):
    return FlowRecord(src, dst, 40000, dport, proto, 2, t, t, nbytes, 1)


def test_empty_set_satisfies_universal_and_not_existential():
    assert evaluate(parse_hypothesis("forall f in F: bytes(f) > 10;"), [])
    assert not evaluate(parse_hypothesis("exists f in F: bytes(f) > 10;"), [])


def test_scan_by_hand():
    h = builtin_scan(c=3)
    probes = [flow("1.1.1.1", f"192.168.1.{a}", t=1000 * a) for a in range(3)]
    assert evaluate(h, probes)
    assert not evaluate(h, probes[:2])                                    # two addresses only
    assert not evaluate(h, probes[:2] + [flow("1.1.1.2", "192.168.1.9")])  # second source
    assert not evaluate(h, probes[:2] + [flow("1.1.1.1", "192.168.2.9")])  # outside the /24
    assert evaluate(h, probes[:2] + [flow("1.1.1.1", "192.168.1.9", t=10_000)])
    assert not evaluate(h, probes[:2] + [flow("1.1.1.1", "192.168.1.9", t=10_001)])


def test_chat_by_hand():
    h = builtin_chat(1500)
    a, b, c = "10.0.0.1", "10.0.0.2", "10.0.0.3"
    assert evaluate(h, [flow(a, b), flow(b, a), flow(a, b)])
    assert not evaluate(h, [flow(a, b), flow(a, c)])
    assert not evaluate(h, [flow(a, b), flow(b, a, nbytes=1501)])


def test_web_by_hand():
    h = builtin_web(300)
    dns = flow("10.1.2.3", "198.18.0.1", dport=53, t=1000, proto=17)
    get = flow("10.1.2.3", "198.18.0.1", dport=443, t=301_000)
    late = flow("10.1.2.3", "198.18.0.1", dport=443, t=301_001)
    early = flow("10.1.2.3", "198.18.0.1", dport=80, t=999)
    assert evaluate(h, [dns, get])
    assert not evaluate(h, [dns, late])
    assert not evaluate(h, [dns, early])
    assert not evaluate(h, [get])
    assert evaluate(h, [dns])
    assert not evaluate(h, [dns, flow("10.1.2.3", "198.18.0.1", dport=22, t=2000)])


def test_count_filter_and_strict_bound():
    flows = [flow("1.1.1.1", f"2.2.2.{a}", dport=22 if a < 2 else 80) for a in range(4)]
    assert evaluate(parse_hypothesis("require count(distinct dstip(f) where dstport(f) == 22) == 2;"), flows)
    assert evaluate(parse_hypothesis("require count(distinct dstip(f)) > 3;"), flows)
    assert not evaluate(parse_hypothesis("require count(distinct dstip(f)) > 4;"), flows)
    assert evaluate(parse_hypothesis("require count(distinct srcip(f)) <= 1;"), flows)


def test_nested_quantifiers():
    h = parse_hypothesis("exists f in F: forall g in F: bytes(g) <= bytes(f);")
    assert evaluate(h, [flow("1.1.1.1", "2.2.2.2", nbytes=n) for n in (40, 90, 60)])
    strict = parse_hypothesis("exists f in F: forall g in F: bytes(g) < bytes(f);")
    assert not evaluate(strict, [flow("1.1.1.1", "2.2.2.2", nbytes=n) for n in (40, 90, 60)])
