"""Energy model: power modes, battery arithmetic, solar balance."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parksense.energy import (
    DEFAULT_NET_RATE_J_PER_H,
    FIELD_UPLINK_LOAD_MW,
    MODE_POWER_MW,
    BatteryState,
    HarvestProfile,
    PowerMode,
    battery_runtime_days,
    daily_balance_j,
    derive_field_load_mw,
    session_energy_j,
    simulate_energy,
    step_energy,
    voltage_of_charge,
)

# Measured mode powers, milliwatts.
TABLE_POWERS = {
    PowerMode.SAMPLING: 0.712,
    PowerMode.SAMPLING_AND_TRANSMISSION: 4.194,
    PowerMode.PRESENCE_DETECTION: 6.951,
    PowerMode.APPLICATION: 1.147,
}


def full_day_sun(hours: float) -> HarvestProfile:
    return HarvestProfile(sun_intervals=((0.0, hours * 3600.0),) if hours else ())


class TestModeTable:
    def test_constants_match_measurements(self):
        assert MODE_POWER_MW == TABLE_POWERS

    def test_all_positive(self):
        assert all(p > 0 for p in MODE_POWER_MW.values())


class TestBatteryRuntime:
    def test_application_mode_runtime(self):
        # 330 mAh * 3.6 * 3.9 V = 4633.2 J at 1.147 mW
        days = battery_runtime_days(330.0, 3.9, 1.147)
        assert days == pytest.approx(46.75, abs=0.05)

    def test_sampling_mode_runtime(self):
        days = battery_runtime_days(330.0, 3.9, 0.712)
        expected = 330.0 * 3.6 * 3.9 / 0.712e-3 / 86400.0
        assert days == expected
        assert days == pytest.approx(75.32, abs=0.01)

    def test_zero_capacity_rejected(self):
        with pytest.raises(ValueError):
            battery_runtime_days(0.0, 3.9, 1.147)

    def test_nonpositive_power_rejected(self):
        with pytest.raises(ValueError):
            battery_runtime_days(330.0, 3.9, 0.0)

    @given(capacity=st.floats(min_value=10, max_value=5000),
           power=st.floats(min_value=0.01, max_value=100))
    @settings(max_examples=100)
    def test_homogeneity(self, capacity, power):
        base = battery_runtime_days(capacity, 3.9, power)
        assert battery_runtime_days(2 * capacity, 3.9, power) == pytest.approx(2 * base)
        assert battery_runtime_days(capacity, 3.9, 2 * power) == pytest.approx(base / 2)


class TestStepEnergy:
    def test_one_hour_in_sun_gains_net_rate(self):
        profile = full_day_sun(6.0)
        for load in (0.0, 1.147, 25.0):
            b = BatteryState.at_fraction(0.5)
            after = step_energy(b, load, 3600.0, harvesting=True, profile=profile)
            assert after.charge_j - b.charge_j == pytest.approx(28.7, abs=1e-9)

    def test_one_hour_dark_at_application_load(self):
        b = BatteryState.at_fraction(0.5)
        after = step_energy(b, 1.147, 3600.0, harvesting=False)
        assert after.charge_j - b.charge_j == pytest.approx(-4.1292, abs=1e-9)

    def test_zero_dt_rejected(self):
        with pytest.raises(ValueError):
            step_energy(BatteryState.at_fraction(0.5), 1.0, 0.0, harvesting=False)

    def test_clamp_at_zero_sets_depleted(self):
        b = BatteryState(charge_j=0.001)
        after = step_energy(b, 1000.0, 3600.0, harvesting=False)
        assert after.charge_j == 0.0
        assert after.depleted

    def test_depletion_hysteresis(self):
        b = BatteryState(charge_j=0.001)
        b = step_energy(b, 1000.0, 3600.0, harvesting=False)
        assert b.depleted
        profile = full_day_sun(24.0)
        # 2% of capacity is not enough to recover
        b = step_energy(b, 0.0, 0.02 * b.capacity_j / 28.7 * 3600.0,
                        harvesting=True, profile=profile)
        assert b.depleted
        # past 5% it is
        b = step_energy(b, 0.0, 0.05 * b.capacity_j / 28.7 * 3600.0,
                        harvesting=True, profile=profile)
        assert not b.depleted

    def test_clamp_at_capacity(self):
        b = BatteryState.full()
        after = step_energy(b, 0.0, 3600.0, harvesting=True, profile=full_day_sun(1.0))
        assert after.charge_j == b.capacity_j

    @given(st.lists(st.tuples(st.floats(min_value=0.0, max_value=5.0),
                              st.booleans()),
                    min_size=1, max_size=200))
    @settings(max_examples=100)
    def test_conservation_without_clamping(self, steps):
        profile = full_day_sun(24.0)
        b = BatteryState.at_fraction(0.5)
        expected = b.charge_j
        for load, sun in steps:
            expected += (28.7 / 60.0) if sun else (-load * 60.0 / 1000.0)
            b = step_energy(b, load, 60.0, harvesting=sun, profile=profile)
            if not 0.0 < expected < b.capacity_j:
                return  # clamped; conservation claim no longer applies
        assert b.charge_j == pytest.approx(expected, abs=1e-6)


class TestDailyBalance:
    def test_field_identity_forward(self):
        # Load derived from the reported daily balance, then verified forward.
        load = derive_field_load_mw()
        assert load == pytest.approx(1.699, abs=1e-3)
        balance = daily_balance_j(full_day_sun(4.5), load)
        assert balance == pytest.approx(9.9, abs=1e-9)
        # with the rounded published constant the balance still lands on 9.9
        assert daily_balance_j(full_day_sun(4.5), FIELD_UPLINK_LOAD_MW) == \
            pytest.approx(9.9, abs=0.5)

    def test_no_sun_application_load(self):
        balance = daily_balance_j(full_day_sun(0.0), 1.147)
        assert balance == pytest.approx(-99.1008, abs=1e-9)

    def test_full_sun_day(self):
        balance = daily_balance_j(full_day_sun(24.0), 5.0)
        assert balance == pytest.approx(24 * 28.7)

    def test_nonpositive_load_rejected(self):
        with pytest.raises(ValueError):
            daily_balance_j(full_day_sun(4.5), 0.0)


class TestVoltageCurve:
    def test_empty_battery(self):
        assert voltage_of_charge(BatteryState(charge_j=0.0)) == pytest.approx(3.0)

    def test_full_battery(self):
        assert voltage_of_charge(BatteryState.full()) == pytest.approx(4.2)

    def test_three_quarters_is_nominal(self):
        assert voltage_of_charge(BatteryState.at_fraction(0.75)) == pytest.approx(3.9)

    @given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=100)
    def test_monotone_and_bounded(self, a, b):
        va = voltage_of_charge(BatteryState.at_fraction(a))
        vb = voltage_of_charge(BatteryState.at_fraction(b))
        assert 3.0 <= va <= 4.2
        if a < b:
            assert va <= vb


class TestSessionEnergy:
    def test_presence_check(self):
        e = session_energy_j([(PowerMode.PRESENCE_DETECTION, 0.08)])
        assert e == pytest.approx(0.00055608, abs=1e-9)

    def test_empty_schedule(self):
        assert session_energy_j([]) == 0.0

    def test_sampling_day(self):
        e = session_energy_j([(PowerMode.SAMPLING, 86400.0)])
        assert e == pytest.approx(61.5168, abs=1e-9)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            session_energy_j([("walkie_talkie", 1.0)])

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            session_energy_j([(PowerMode.SAMPLING, -1.0)])


class TestHarvestProfile:
    def test_json_roundtrip(self):
        p = HarvestProfile(sun_intervals=((36000.0, 52200.0),), net_rate_j_per_h=28.7)
        again = HarvestProfile.from_json(p.to_json())
        assert again == p

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            HarvestProfile(sun_intervals=((0.0, 7200.0), (3600.0, 10800.0)))

    def test_out_of_day_rejected(self):
        with pytest.raises(ValueError):
            HarvestProfile(sun_intervals=((80000.0, 90000.0),))

    def test_sun_hours_and_lookup(self):
        p = HarvestProfile(sun_intervals=((36000.0, 52200.0),))
        assert p.sun_hours == pytest.approx(4.5)
        assert p.in_sun(36000.0)
        assert p.in_sun(86400.0 + 40000.0)  # repeats daily
        assert not p.in_sun(0.0)


class TestFieldWeek:
    def test_five_days_at_average_winter_sun(self):
        # 2.7 h of sun per day for 5 days (13.5 h total) at the field load.
        # The modelled energy delta is exactly the daily-balance composition;
        # the battery concludes on nearly the voltage level it started.
        profile = HarvestProfile(sun_intervals=((36000.0, 45720.0),))
        assert profile.sun_hours == pytest.approx(2.7)
        start = BatteryState.at_fraction(0.75)
        end, trace = simulate_energy(start, profile, FIELD_UPLINK_LOAD_MW, days=5)
        expected_delta = 5 * daily_balance_j(profile, FIELD_UPLINK_LOAD_MW)
        assert end.charge_j - start.charge_j == pytest.approx(expected_delta, abs=1e-6)
        v0, v1 = voltage_of_charge(start), voltage_of_charge(end)
        assert abs(v1 - v0) / v0 <= 0.02
        assert len(trace) == 5 * 1440 + 1
