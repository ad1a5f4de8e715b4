import subprocess
from pathlib import Path

import pytest


def pytest_addoption(parser):
    parser.addoption("--adcs", required=True, help="path to the adcs executable")
    parser.addoption("--config", required=True, help="nominal configuration file")


@pytest.fixture(scope="session")
def nominal(request):
    return Path(request.config.getoption("--config")).resolve()


@pytest.fixture(scope="session")
def adcs(request):
    exe = str(Path(request.config.getoption("--adcs")).resolve())

    def run(*args, cwd):
        return subprocess.run([exe, *map(str, args)], cwd=cwd, capture_output=True, text=True, timeout=600)

    return run


@pytest.fixture(scope="session")
def small_config(nominal, tmp_path_factory):
    """Nominal scenario with a smaller training campaign."""
    text = nominal.read_text().replace("runs = 15", "runs = 4")
    path = tmp_path_factory.mktemp("config") / "small.ini"
    path.write_text(text)
    return path


@pytest.fixture(scope="session")
def trained(adcs, small_config, tmp_path_factory):
    """Working directory holding tuned gains and a controller bundle."""
    work = tmp_path_factory.mktemp("trained")
    for args in (["tune-pid", "--budget", "60"], ["gen-data", "--role", "controller"],
                 ["train", "--role", "controller"]):
        r = adcs(args[0], small_config, *args[1:], "-q", cwd=work)
        assert r.returncode == 0, r.stderr
    return work
