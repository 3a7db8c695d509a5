"""
A week of three parks, end to end
=================================

Runs the default scenario: three sensors at parks with different traffic,
seven days, midday and evening peaks, winter sun. Every synthetic sample
goes through the real detection state machine, every detected session is
charged to the battery and pushed through the uplink codec and channel.
The report pairs detections with ground truth and keeps the energy ledger
balanced to numerical precision.
"""

from parksense.sim import default_scenario, run_sim

scenario = default_scenario(days=7, seed=42, n_sensors=3)
report = run_sim(scenario)

for sensor in report.sensors:
    led = sensor.ledger
    print(f"sensor {sensor.sensor_id}:")
    print(f"  ground-truth sessions : {len(sensor.ground_truth)}")
    print(f"  detected / delivered  : {len(sensor.detected)} / {len(sensor.delivered)}")
    print(f"  detection rate        : {sensor.detection_rate:.0%}")
    print(f"  mean |duration error| : {sensor.mean_abs_duration_error_s:.2f} s")
    print(f"  battery               : {led.initial_j:.0f} J -> {led.final_j:.0f} J "
          f"(harvested {led.harvest_j:.0f} J, spent {led.load_j:.0f} J)")
    print(f"  ledger residual       : {led.residual_j:+.2e} J")

out = report.write_outputs("simout-week")
print("\nwrote:")
for path in out:
    print(f"  {path}")
print("\nreplay the uplink log into a live service with:")
print("  parksense serve --data-dir demo-data &")
print("  parksense replay-uplinks simout-week/uplinks.jsonl --fast")
