import pytest

from flowgen import CASES, random_flows
from superflow.errors import UnsupportedHypothesisError
from superflow.flows import FlowRecord
from superflow.hypothesis import builtin_chat, builtin_scan, builtin_web, classify, parse_hypothesis
from superflow.monitor import Offer, monitor_new, monitor_offer, monitor_qualified


def test_offer_truthiness():
    assert Offer.ACCEPTED
    assert not Offer.REJECTED
    assert not Offer.WITNESS_EXHAUSTED


def test_refuses_unmonitorable():
    cls = classify(parse_hypothesis("exists f in F: forall g in F: bytes(g) < bytes(f);"))
    with pytest.raises(UnsupportedHypothesisError, match="existential"):
        monitor_new(cls)


@pytest.mark.parametrize("kind", sorted(CASES))
def test_decisions_match_evaluator(kind):
    cls = classify(CASES[kind][0])
    for seed in range(200):
        state = monitor_new(cls)
        accepted = []
        for f in random_flows(kind, seed):
            outcome = monitor_offer(state, f)
            assert bool(outcome) == cls.compatible(accepted + [f])
            if outcome:
                accepted.append(f)
            assert monitor_qualified(state) == cls.qualified(accepted)


@pytest.mark.parametrize("kind", sorted(CASES))
def test_rejection_leaves_state_untouched(kind):
    cls = classify(CASES[kind][0])
    for seed in range(100):
        state = monitor_new(cls)
        for f in random_flows(kind, seed):
            before = state.snapshot()
            if not state.offer(f):
                assert state.snapshot() == before


def test_scan_state_is_bounded_by_threshold():
    state = monitor_new(classify(builtin_scan(prefix="10.0.0.0/8", window=10**6, c=256)))
    peak = 0
    for i in range(20_000):
        f = FlowRecord("1.1.1.1", 0x0A000000 + i, 1, 22, 6, 2, i, i, 40, 1)
        assert state.offer(f)
        peak = max(peak, state.retained_values())
    assert state.qualified
    assert peak <= 256 + 3
    assert state.retained_values() == 3   # anchor and one time spread


def test_chat_state_is_constant():
    state = monitor_new(classify(builtin_chat()))
    for i in range(5_000):
        src, dst = ("10.0.0.1", "10.0.0.2") if i % 2 else ("10.0.0.2", "10.0.0.1")
        assert state.offer(FlowRecord(src, dst, 1, 2, 6, 0, i, i, 100, 1))
        assert state.retained_values() == 1


def dns(t):
    return FlowRecord("10.1.2.3", "198.18.0.1", 1, 53, 17, 0, t, t, 60, 1)


def https(t):
    return FlowRecord("10.1.2.3", "198.18.0.1", 1, 443, 6, 0, t, t, 900, 3)


def test_witness_ring_prunes_old_lookups():
    state = monitor_new(classify(builtin_web(window=1)), witness_capacity=8)
    for i in range(2_000):
        t = i * 500
        assert state.offer(dns(t))
        assert state.offer(https(t + 100))
        assert state.retained_values() <= 1 + 8 + 1
    assert not state.offer(https(2_000 * 500 + 5_000))


def test_witness_ring_overflow_is_reported():
    state = monitor_new(classify(builtin_web(window=300)), witness_capacity=4)
    outcomes = [state.offer(dns(t)) for t in range(6)]
    assert outcomes[:4] == [Offer.ACCEPTED] * 4
    assert outcomes[4] is Offer.WITNESS_EXHAUSTED
    before = state.snapshot()
    assert state.offer(dns(5)) is Offer.WITNESS_EXHAUSTED
    assert state.snapshot() == before


def test_web_needs_earlier_lookup():
    state = monitor_new(classify(builtin_web()))
    assert not state.offer(https(1000))
    assert state.offer(dns(1000))
    assert state.offer(https(1000))
    assert state.offer(https(301_000))
    assert not state.offer(https(301_001))
