#!/usr/bin/env python3
"""Regenerate the pinned parity fixtures from the core service.

Each fixture stores the exact request payload and the service's exact
response; the client tests replay the request against a live service and
require deep equality with the stored response.
"""

import json
import warnings
from pathlib import Path

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from mvpure.model import synth_scenario
from mvpure.service import app

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def main() -> None:
    client = TestClient(app)
    scn = synth_scenario(
        m=12,
        s=9,
        l0=2,
        source_snr=[1.5, 1.0],
        noise_kind="spd",
        correlation=0.2,
        seed=42,
        min_angle_deg=30,
    )
    leadfield = scn.leadfield.gains.tolist()
    R = scn.R.matrix.tolist()
    N = scn.N.matrix.tolist()

    fixtures = {
        "suggest.json": (
            "/api/spectrum",
            {"R": R, "N": N, "l0_threshold": 1e-6, "rank_threshold": 0.5},
        ),
        "localize.json": (
            "/api/localize",
            {
                "leadfield": leadfield,
                "R": R,
                "N": N,
                "n_sources": 2,
                "rank": 2,
                "index_kind": "mpz_mvp",
            },
        ),
        "make_filter.json": (
            "/api/make-filter",
            {
                "leadfield": leadfield,
                "sources": list(scn.true_sources),
                "R": R,
                "N": N,
                "kind": "mvp_r",
                "rank": 1,
                "reg_data": 0.05,
            },
        ),
    }

    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    for name, (endpoint, request) in fixtures.items():
        resp = client.post(endpoint, json=request)
        resp.raise_for_status()
        doc = {"endpoint": endpoint, "request": request, "expected": resp.json()}
        path = FIXTURE_DIR / name
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
