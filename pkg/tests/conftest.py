import zipfile
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
THINKING_DIR = FIXTURES / "thinking-v2"
THINKING_CONFIG = FIXTURES / "toskose-thinking.yml"
GOLDEN_COMPOSE = FIXTURES / "golden" / "docker-compose.yml"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" not in getattr(report, "nodeid", ""):
                continue
            if getattr(report, "when", "call") != "call" and outcome == "passed":
                continue
            name = report.nodeid.split("::")[-1]
            lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in dict(lines).items():
            terminalreporter.write_line(f"{status}  {name}")


def zip_fixture(source: Path, target: Path) -> Path:
    with zipfile.ZipFile(target, "w") as archive:
        for path in sorted(source.rglob("*")):
            if path.is_file():
                archive.write(path, path.relative_to(source))
    return target


@pytest.fixture(scope="session")
def thinking_csar(tmp_path_factory) -> Path:
    """The thinking application packaged as a CSAR archive."""
    target = tmp_path_factory.mktemp("csar") / "thinking-v2.csar"
    return zip_fixture(THINKING_DIR, target)


@pytest.fixture(scope="session")
def thinking_artifact(thinking_csar, tmp_path_factory) -> Path:
    """A generated deployment artifact for the thinking application."""
    from toskose.packager.pipeline import run_pipeline

    out = tmp_path_factory.mktemp("artifact") / "out"
    return run_pipeline(thinking_csar, THINKING_CONFIG, output_dir=out).output_dir


@pytest.fixture(scope="session")
def thinking_template_text() -> str:
    return (THINKING_DIR / "thinking.yaml").read_text()


@pytest.fixture(scope="session")
def thinking_config_text() -> str:
    return THINKING_CONFIG.read_text()


@pytest.fixture(scope="session")
def golden_compose_text() -> str:
    return GOLDEN_COMPOSE.read_text()
