import os
import shutil
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("STOMMEL_CLI") or shutil.which("stommel")
    if not path or not Path(path).exists():
        pytest.skip("stommel executable not available (set STOMMEL_CLI)")
    return path
