import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report_criterion():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {title}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])


CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def small_config_data(out_dir, m=24, n_locations=3, n_offsets=1) -> dict:
    """A cut-down desk config: coarse grid, a few users, absolute paths."""
    data = json.loads((CONFIG_DIR / "desk.json").read_text())
    data["scene"] = str(CONFIG_DIR / "desk_scene.json")
    data["sensing"].update(m_h=m, m_v=m)
    data["users"]["locations"] = data["users"]["locations"][:n_locations]
    data["users"]["antenna_offsets"] = data["users"]["antenna_offsets"][:n_offsets]
    data["output_dir"] = str(out_dir)
    return data


@pytest.fixture
def small_config(tmp_path):
    """Write a small config file and return its path."""

    def make(name="cfg.json", **kwargs):
        path = tmp_path / name
        path.write_text(json.dumps(small_config_data(tmp_path / "out", **kwargs)))
        return path

    return make
