import time

import pytest

from dualris.experiments import RunConfig, calibrate, delta_metrics, sweep_elevation


@pytest.fixture(scope="session")
def run_config():
    return RunConfig()


@pytest.fixture(scope="session")
def calibrated(run_config):
    """Default calibration plus its wall-clock cost (checked by acceptance)."""
    t0 = time.time()
    cal = calibrate(run_config)
    return {"cal": cal, "seconds": time.time() - t0}


@pytest.fixture(scope="session")
def sweep_result(run_config, calibrated):
    t0 = time.time()
    rows = delta_metrics(sweep_elevation(run_config, calibrated["cal"]))
    return {"rows": rows, "seconds": time.time() - t0,
            "by": {(r.elevation_deg, r.n_elements): r for r in rows}}
