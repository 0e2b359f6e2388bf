import pytest

from healthmon.scenario import (
    ScenarioError,
    load_scenario,
    parse_scenario,
    with_fault_onset,
)

MINIMAL = "fleet_size: 4\nhorizon_s: 10\n"


class TestDefaults:
    def test_minimal_file_fills_defaults(self):
        s = parse_scenario(MINIMAL)
        assert s.fleet_size == 4
        assert s.horizon_us == 10_000_000
        assert s.seed == 0
        assert s.monitor.period_us == 1_000_000
        assert s.monitor.deadline_us == 10_000
        assert s.monitor.retries == 2
        assert s.monitor.retry_spacing_us == 10_000
        assert s.bus.bitrate == 500_000
        assert s.telematics.loss_probability == 0.0
        assert s.faults == []

    def test_config_echo_round_trips_defaults(self):
        echo = parse_scenario(MINIMAL).config_echo()
        assert echo["monitor"]["period_us"] == 1_000_000
        assert echo["fleet_size"] == 4
        assert echo["faults"] == []


class TestRejection:
    def test_missing_required_keys(self):
        with pytest.raises(ScenarioError, match="fleet_size"):
            parse_scenario("horizon_s: 10\n")
        with pytest.raises(ScenarioError, match="horizon_s"):
            parse_scenario("fleet_size: 4\n")

    def test_unknown_key_named_with_line(self):
        text = MINIMAL + "bogus_key: 1\n"
        with pytest.raises(ScenarioError, match=r":3: bogus_key: unknown key"):
            parse_scenario(text)

    def test_unknown_nested_key_named_with_line(self):
        text = MINIMAL + "monitor:\n  period_s: 1.0\n  warp: 9\n"
        with pytest.raises(ScenarioError, match=r":5: monitor.warp: unknown key"):
            parse_scenario(text)

    def test_fault_beyond_horizon_names_the_entry(self):
        text = MINIMAL + "faults:\n  - {at_s: 11, ecu: 1, kind: fail_silent}\n"
        with pytest.raises(ScenarioError, match=r"faults\[0\].at_s.*horizon"):
            parse_scenario(text)

    def test_fault_ecu_out_of_range(self):
        text = MINIMAL + "faults:\n  - {at_s: 1, ecu: 99, kind: fail_silent}\n"
        with pytest.raises(ScenarioError, match=r"faults\[0\].ecu.*fleet size"):
            parse_scenario(text)

    def test_minor_fault_requires_minor_code(self):
        text = MINIMAL + "faults:\n  - {at_s: 1, ecu: 1, kind: minor, code: 0x90}\n"
        with pytest.raises(ScenarioError, match="minor codes"):
            parse_scenario(text)

    def test_fail_silent_must_not_carry_code(self):
        text = MINIMAL + "faults:\n  - {at_s: 1, ecu: 1, kind: fail_silent, code: 3}\n"
        with pytest.raises(ScenarioError, match="no error code"):
            parse_scenario(text)

    def test_unknown_fault_kind(self):
        text = MINIMAL + "faults:\n  - {at_s: 1, ecu: 1, kind: explode}\n"
        with pytest.raises(ScenarioError, match="kind"):
            parse_scenario(text)

    def test_type_errors_are_named(self):
        with pytest.raises(ScenarioError, match="fleet_size.*integer"):
            parse_scenario("fleet_size: four\nhorizon_s: 10\n")
        with pytest.raises(ScenarioError, match="horizon_s"):
            parse_scenario("fleet_size: 4\nhorizon_s: -1\n")

    def test_not_yaml_at_all(self):
        with pytest.raises(ScenarioError, match="YAML"):
            parse_scenario("{::::")

    def test_non_mapping_document(self):
        with pytest.raises(ScenarioError):
            parse_scenario("- 1\n- 2\n")
        with pytest.raises(ScenarioError):
            parse_scenario("just a string\n")

    def test_empty_file(self):
        with pytest.raises(ScenarioError, match="empty"):
            parse_scenario("")

    def test_slot_overlap_rejected_at_load(self):
        # defaults give a 50 ms retry budget; 80 ECUs leave 12.5 ms slots
        with pytest.raises(ScenarioError, match="slot"):
            parse_scenario("fleet_size: 80\nhorizon_s: 10\n")

    def test_background_ids_must_clear_response_range(self):
        text = MINIMAL + "background:\n  frames_per_s: 100\n  id_min: 0x100\n"
        with pytest.raises(ScenarioError, match="response range"):
            parse_scenario(text)

    def test_loss_probability_bounds(self):
        text = MINIMAL + "telematics:\n  loss_probability: 1.5\n"
        with pytest.raises(ScenarioError, match="loss_probability"):
            parse_scenario(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario(tmp_path / "nope.yaml")

    def test_binary_junk_file(self, tmp_path):
        p = tmp_path / "junk.yaml"
        p.write_bytes(bytes(range(256)) * 4)
        with pytest.raises(ScenarioError):
            load_scenario(p)


class TestFaults:
    def test_valid_fault_parsed_with_units_converted(self):
        text = MINIMAL + (
            "faults:\n"
            "  - {at_s: 3.2, ecu: 2, kind: fail_silent, duration_s: 1.5}\n"
            "  - {at_s: 2.0, ecu: 3, kind: minor, code: 0x2A, recoverable: true}\n"
        )
        s = parse_scenario(text)
        assert s.faults[0].at_us == 3_200_000
        assert s.faults[0].duration_us == 1_500_000
        assert s.faults[1].code == 0x2A
        assert s.faults[1].recoverable is True

    def test_with_fault_onset_requires_single_fault(self):
        s = parse_scenario(MINIMAL)
        with pytest.raises(ScenarioError, match="exactly one fault"):
            with_fault_onset(s, 1000)

    def test_with_fault_onset_moves_only_the_onset(self):
        text = MINIMAL + "faults:\n  - {at_s: 3.2, ecu: 2, kind: fail_silent}\n"
        s = parse_scenario(text)
        moved = with_fault_onset(s, 42)
        assert moved.faults[0].at_us == 42
        assert moved.faults[0].ecu == 2
        assert s.faults[0].at_us == 3_200_000  # original untouched
