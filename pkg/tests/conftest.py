import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lncdis import _kernels  # noqa: E402
from lncdis.data import AssociationMatrix, EntityCatalog  # noqa: E402


@pytest.fixture(params=sorted(_kernels.BACKENDS))
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    mod = _kernels.get(request.param)
    monkeypatch.setattr(_kernels, "backend", mod)
    return mod


def make_matrix(values, row_kind="lncRNA", col_kind="disease", prefix=("r", "c")):
    values = np.asarray(values, dtype=float)
    rows = EntityCatalog(row_kind, [f"{prefix[0]}{i}" for i in range(values.shape[0])])
    cols = EntityCatalog(col_kind, [f"{prefix[1]}{j}" for j in range(values.shape[1])])
    return AssociationMatrix(rows, cols, values)


@pytest.fixture
def write_tsv(tmp_path):
    def _write(name, lines):
        path = tmp_path / name
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path

    return _write


FAST = [
    "cnn.epochs = 3",
    "cnn.hidden_units = 16",
    "cnn.conv_kernel = 2,8",
    "cnn.learning_rate = 0.05",
    "gbdt.num_trees = 20",
    "gbdt.max_depth = 4",
]


def fast_config(*extra):
    from lncdis.config import parse_config_text

    return parse_config_text("\n".join([*FAST, *extra]))


@pytest.fixture(scope="session")
def small_data():
    from lncdis import synth

    return synth.generate(n_lnc=20, n_dis=24, n_mir=12, blocks=3, seed=5)


@pytest.fixture(scope="session")
def small_inputs(small_data):
    from lncdis.evaluation import Inputs

    d = small_data
    return Inputs.align(d.ld, d.md, d.lm, d.dag)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
