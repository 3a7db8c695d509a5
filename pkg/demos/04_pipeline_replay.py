"""
From webhook to dashboard numbers
=================================

Simulates a day, feeds the network-server webhooks into the ingestion
service (in process), and queries the aggregation API the dashboard uses.
Replaying the same log a second time changes nothing: delivery is
at-least-once, ingestion is exactly-once.
"""

from datetime import timedelta

from fastapi.testclient import TestClient

from parksense.service import create_app
from parksense.sim import default_scenario, run_sim
from parksense.store import EventStore, parse_rfc3339

report = run_sim(default_scenario(days=1, seed=7, n_sensors=3))
envelopes = report.envelopes()
print(f"simulated 1 day, {len(envelopes)} uplinks delivered")

store = EventStore(":memory:")
client = TestClient(create_app(store))

for env in envelopes:
    assert client.post("/v1/uplink", json=env).status_code == 201
print(f"ingested {store.event_count()} events")

# replaying the full log is a no-op
for env in envelopes:
    assert client.post("/v1/uplink", json=env).json()["duplicate"] is True
print(f"after replaying the log again: still {store.event_count()} events")

sensors = client.get("/v1/sensors").json()["sensors"]
for s in sensors:
    print(f"sensor {s['sensor_id']}: {s['event_count']} events, "
          f"battery {s['last_battery_mv']} mV")

start = parse_rfc3339(report.scenario["start_time"])
fmt = "%Y-%m-%dT%H:%M:%SZ"
resp = client.get("/v1/activities", params={
    "from": start.strftime(fmt),
    "to": (start + timedelta(days=2)).strftime(fmt),
    "bucket": "hour",
})
buckets = resp.json()["buckets"]
busiest = max(buckets, key=lambda b: b["total_active_s"])
print(f"\nhourly profile over {len(buckets)} buckets; busiest hour starts "
      f"{busiest['bucket_start']} with {busiest['total_active_s']} active seconds "
      f"across {busiest['session_count']} sessions")
