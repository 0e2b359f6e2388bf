import pytest

from healthmon import protocol
from healthmon.canbus import BusConfig, CanBus
from healthmon.ecu import EcuNode, ErrorCode, Health
from healthmon.simcore import Kernel


def make_node(ecu_id=3, processing_delay_us=200):
    k = Kernel()
    bus = CanBus(k, BusConfig())
    responses = []
    bus.register("mon", lambda f, at: responses.append((at, f)))
    node = EcuNode(k, bus, ecu_id, processing_delay_us=processing_delay_us)
    return k, bus, node, responses


def poll(bus, ecu_id):
    bus.submit(protocol.poll_frame("mon", ecu_id))


class TestOnPoll:
    def test_healthy_node_acks_after_processing_delay(self):
        k, bus, node, responses = make_node()
        poll(bus, 3)
        k.run_until(10_000)
        assert len(responses) == 1
        _, frame = responses[0]
        assert frame.id == protocol.RESPONSE_BASE + 3
        assert frame.payload == bytes([3, protocol.ACK_STATUS])
        # poll delivered at 130 us, response submitted 200 us later
        ack_tx = bus.log[-1]
        assert ack_tx.submitted_at == 130 + 200

    def test_faulted_node_nacks_with_error_code(self):
        k, bus, node, responses = make_node()
        node.inject_fault(ErrorCode(0x2A, recoverable=True))
        poll(bus, 3)
        k.run_until(10_000)
        assert len(responses) == 1
        assert responses[0][1].payload == bytes([3, 0x2A])

    def test_failed_node_stays_silent(self):
        k, bus, node, responses = make_node()
        node.inject_fault(None)
        for _ in range(3):
            poll(bus, 3)
        k.run_until(100_000)
        assert responses == []

    def test_poll_for_other_ecu_ignored(self):
        k, bus, node, responses = make_node(ecu_id=3)
        poll(bus, 4)
        k.run_until(10_000)
        assert responses == []

    def test_malformed_poll_ignored_and_counted(self):
        k, bus, node, responses = make_node()
        from healthmon.canbus import Frame

        bus.submit(Frame(id=protocol.POLL_ID, dlc=2, payload=bytes([3, 0]), sender="mon"))
        k.run_until(10_000)
        assert responses == []
        assert node.malformed_polls == 1

    def test_exactly_one_response_per_poll(self):
        k, bus, node, responses = make_node()
        for i in range(5):
            k.register(f"p{i}", lambda ev: poll(bus, 3))
            k.schedule(i * 10_000, f"p{i}", "go")
        k.run_until(100_000)
        assert len(responses) == 5


class TestInjectFault:
    def test_minor_fault_reported_from_injection_onward(self):
        k, bus, node, responses = make_node()
        k.register("inject", lambda ev: node.inject_fault(ErrorCode(0x2A, recoverable=True)))
        k.schedule(5_000, "inject", "go")
        poll(bus, 3)  # answered healthy
        k.register("p2", lambda ev: poll(bus, 3))
        k.schedule(6_000, "p2", "go")  # answered faulted
        k.run_until(100_000)
        assert responses[0][1].payload[1] == protocol.ACK_STATUS
        assert responses[1][1].payload[1] == 0x2A

    def test_fail_silent_discards_queued_response(self):
        k, bus, node, responses = make_node()
        poll(bus, 3)
        # poll delivers at 130, respond event queued for 330: kill at 200
        k.register("inject", lambda ev: node.inject_fault(None))
        k.schedule(200, "inject", "go")
        k.run_until(100_000)
        assert responses == []

    def test_fail_silent_withdraws_frame_pending_on_bus(self):
        k, bus, node, responses = make_node(processing_delay_us=10)
        from healthmon.canbus import Frame

        bus.register("hog", lambda f, at: None)
        poll(bus, 3)
        # occupy the bus so the ack sits in the node's pending queue
        k.register("hogger", lambda ev: bus.submit(
            Frame(id=0x001, dlc=8, payload=bytes(8), sender="hog")))
        k.schedule(135, "hogger", "go")
        k.register("inject", lambda ev: node.inject_fault(None))
        k.schedule(150, "inject", "go")
        k.run_until(100_000)
        acks = [f for _, f in responses if f.id == protocol.RESPONSE_BASE + 3]
        assert acks == []

    def test_injecting_into_failed_node_is_noop(self):
        k, bus, node, responses = make_node()
        node.inject_fault(None)
        node.inject_fault(ErrorCode(0x11), duration_us=1000)
        assert node.health is Health.FAILED
        k.run_until(10_000)
        assert node.health is Health.FAILED  # no sneaky recovery either

    @pytest.mark.parametrize("phase_us", range(0, 30_000, 1_000))
    def test_transient_failure_misses_exactly_the_window_polls(self, phase_us):
        # polls every 5 ms; failure window [7 ms, 19 ms) shifted by phase
        k, bus, node, responses = make_node(processing_delay_us=10)
        onset = 7_000 + phase_us
        duration = 12_000
        poll_times = list(range(phase_us, phase_us + 60_000, 5_000))
        for i, t in enumerate(poll_times):
            k.register(f"p{i}", lambda ev: poll(bus, 3))
            k.schedule(t, f"p{i}", "go")
        k.register("inject", lambda ev: node.inject_fault(None, duration_us=duration))
        k.schedule(onset, "inject", "go")
        k.run_until(200_000)
        # a poll is missed iff the node is failed when the poll frame arrives
        # (delivery 130 us after submission) or when its reply would be sent
        expected_answered = []
        for t in poll_times:
            deliver = t + 130
            reply = deliver + 10
            if onset <= deliver < onset + duration or onset <= reply < onset + duration:
                continue
            expected_answered.append(t)
        assert len(responses) == len(expected_answered)


class TestApplyCorrective:
    def test_recoverable_fault_cleared(self):
        k, bus, node, _ = make_node()
        node.inject_fault(ErrorCode(0x2A, recoverable=True))
        bus.submit(protocol.corrective_frame("mon", 3))
        k.run_until(10_000)
        assert node.health is Health.HEALTHY
        assert node.fault is None

    def test_non_recoverable_fault_persists(self):
        k, bus, node, _ = make_node()
        node.inject_fault(ErrorCode(0x4C, recoverable=False))
        bus.submit(protocol.corrective_frame("mon", 3))
        k.run_until(10_000)
        assert node.health is Health.FAULTED
        assert node.fault.code == 0x4C

    def test_corrective_on_healthy_node_is_noop(self):
        k, bus, node, _ = make_node()
        bus.submit(protocol.corrective_frame("mon", 3))
        k.run_until(10_000)
        assert node.health is Health.HEALTHY

    def test_corrective_to_failed_node_is_lost(self):
        k, bus, node, _ = make_node()
        node.inject_fault(None)
        bus.submit(protocol.corrective_frame("mon", 3))
        k.run_until(10_000)
        assert node.health is Health.FAILED


class TestErrorCode:
    def test_code_zero_is_reserved(self):
        with pytest.raises(ValueError):
            ErrorCode(0x00)

    def test_severity_partition(self):
        assert ErrorCode(0x01).minor
        assert ErrorCode(0x7F).minor
        assert not ErrorCode(0x80).minor
        assert not ErrorCode(0xFE).minor
