import json
import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def suite_reports(tmp_path_factory):
    """All six rough-scl suite reports, produced through the public CLI."""
    outdir = tmp_path_factory.mktemp("reports")
    proc = subprocess.run(
        [sys.executable, "-m", "rough_scl.cli", "validate", "all",
         f"--output.dir={outdir}", "--threads", "2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return outdir


@pytest.fixture(scope="session")
def simulation_csvs(tmp_path_factory):
    """Snapshot/ledger CSVs from one small simulate run."""
    outdir = tmp_path_factory.mktemp("sim")
    proc = subprocess.run(
        [sys.executable, "-m", "rough_scl.cli", "simulate",
         "--driver.dyadic_level=4", "--grid.nx=150",
         f"--output.dir={outdir}"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return outdir


def write_spec(path, **kw):
    path.write_text(json.dumps(kw))
    return str(path)
