import json
import random
from pathlib import Path

import pytest

from app.services.symmetry import SymSetup

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(autouse=True)
def isolated_dirs(tmp_path, monkeypatch):
    """Audit log and reports go to a per-test temporary directory."""
    monkeypatch.setenv("FNEF_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setenv("FNEF_OUTPUT_DIR", str(tmp_path / "output"))
    monkeypatch.setenv("FNEF_LOG_ENABLED", "1")
    monkeypatch.setenv("FNEF_MAX_JOBS", "1")
    return tmp_path


@pytest.fixture
def rng():
    return random.Random(20240518)


@pytest.fixture
def golden():
    def load(name: str):
        return json.loads((GOLDEN / name).read_text())
    return load


@pytest.fixture
def s6():
    return SymSetup(6, 6)


@pytest.fixture
def divisor_file(tmp_path):
    """Write a divisor JSON file; boundary and psi are (subset or point, "p/q") pairs."""
    def write(n: int, boundary=(), psi=(), name: str = "divisor.json") -> Path:
        payload = {
            "n": n,
            "boundary": [{"subset": list(s), "coeff": c} for s, c in boundary],
            "psi": [{"point": p, "coeff": c} for p, c in psi],
        }
        path = tmp_path / name
        path.write_text(json.dumps(payload, indent=2))
        return path
    return write
