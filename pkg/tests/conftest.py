import json
from importlib.resources import files
from pathlib import Path

import pytest

DATA = files("defi_stress") / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return Path(str(DATA))


@pytest.fixture(scope="session")
def eth_csv(data_dir) -> Path:
    return data_dir / "eth_usd_daily.csv"


@pytest.fixture(scope="session")
def baseline_config(data_dir) -> dict:
    return json.loads((data_dir / "baseline_scenario.json").read_text())


@pytest.fixture(scope="session")
def attack_plan_raw(data_dir) -> dict:
    return json.loads((data_dir / "maker_feb2020.json").read_text())


@pytest.fixture(scope="session")
def dai_snapshot_csv(data_dir) -> Path:
    return data_dir / "dai_markets.csv"
