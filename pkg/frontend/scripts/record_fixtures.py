#!/usr/bin/env python3
"""Record service payload fixtures for the console's contract tests.

Runs the real backend in-process, drives a scripted 50-event observe/undo
session, and freezes every response under test/fixtures/. Deterministic:
exact-backend design, seeded event script.
"""

import json
import time
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
from fastapi.testclient import TestClient

from seqaudit.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "test" / "fixtures"

DESIGN = {
    "n": 40, "r": 0.2, "theta_h": 0.05, "theta_k": 0.05,
    "alpha": 0.05, "beta": 0.05, "backend": "exact", "seed": 3,
}
TRUNCATED = {**DESIGN, "n": 24, "variant": "truncated", "T": 9}


def wait_ready(client, design_id):
    for _ in range(2000):
        status = client.get(f"/designs/{design_id}/status").json()
        if status["state"] == "ready":
            return
        if status["state"] == "failed":
            raise RuntimeError(status["error"])
        time.sleep(0.01)
    raise RuntimeError("calibration did not finish")


def dump(name, payload):
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {name}")


def main():
    with TemporaryDirectory() as tmp, TestClient(create_app(tmp)) as client:
        design_id = client.post("/designs", json=DESIGN).json()["design_id"]
        wait_ready(client, design_id)
        dump("design_detail.json", client.get(f"/designs/{design_id}").json())

        trunc_id = client.post("/designs", json=TRUNCATED).json()["design_id"]
        wait_ready(client, trunc_id)
        dump("design_truncated.json", client.get(f"/designs/{trunc_id}").json())

        dump(
            "oc_response.json",
            client.get(f"/designs/{design_id}/oc", params={"reps": 400, "seed": 2, "grid": "all"}).json(),
        )

        created = client.post("/sessions", json={"design_id": design_id}).json()
        dump("session_initial.json", created)
        sid = created["session_id"]

        # deviation-heavy so the script crosses boundaries, then undoes past
        # the decision and keeps going; all three statuses must appear
        rng = np.random.default_rng(2718)
        seq = created["seq"]
        decided = created["status"] != "continue"
        t = created["t"]
        events = []
        for _ in range(50):
            do_undo = decided or (t > 0 and rng.random() < 0.25)
            if do_undo:
                resp = client.post(f"/sessions/{sid}/undo", json={"expected_seq": seq})
                action = {"action": "undo"}
            else:
                x = int(rng.random() < 0.7)
                resp = client.post(f"/sessions/{sid}/observe", json={"x": x, "expected_seq": seq})
                action = {"action": "observe", "x": x}
            body = resp.json()
            events.append({**action, "status_code": resp.status_code, "response": body})
            seq = body["seq"]
            decided = body["status"] != "continue"
            t = body["t"]
        statuses = {e["response"]["status"] for e in events}
        assert "accepted_K" in statuses and "continue" in statuses, statuses
        dump("session_script.json", events)
        dump("session_final.json", client.get(f"/sessions/{sid}").json())

        # a lower-boundary decision for banner coverage of accepted_H
        low = client.post("/sessions", json={"design_id": design_id}).json()
        lseq = low["seq"]
        view = low
        while view["status"] == "continue":
            view = client.post(
                f"/sessions/{low['session_id']}/observe", json={"x": 0, "expected_seq": lseq}
            ).json()
            lseq = view["seq"]
        assert view["status"] == "accepted_H", view["status"]
        dump("session_accepted_h.json", view)

        # one stale-seq conflict for the 409 contract
        ok = client.post(f"/sessions/{sid}/observe", json={"x": 0, "expected_seq": seq})
        if ok.status_code == 422:  # decided; undo once to allow an observe
            client.post(f"/sessions/{sid}/undo", json={"expected_seq": seq})
            seq += 1
            ok = client.post(f"/sessions/{sid}/observe", json={"x": 0, "expected_seq": seq})
        assert ok.status_code == 200
        stale = client.post(f"/sessions/{sid}/observe", json={"x": 0, "expected_seq": seq})
        assert stale.status_code == 409
        dump("conflict_409.json", stale.json())

        bad = client.post("/designs", json={**DESIGN, "alpha": 0.7})
        assert bad.status_code == 422
        dump("error_config_422.json", bad.json())
        bad_type = client.post("/designs", json={**DESIGN, "alpha": "not-a-number"})
        assert bad_type.status_code == 422
        dump("error_type_422.json", bad_type.json())


if __name__ == "__main__":
    main()
