import sys

import pytest

from fxsvm.datasets import generate_synthetic, load_uci_breast_cancer, split


@pytest.fixture(scope="session")
def breast_cancer():
    return load_uci_breast_cancer()


@pytest.fixture(scope="session")
def bc_split(breast_cancer):
    return split(breast_cancer, 0.7, 0)


@pytest.fixture(scope="session")
def synthetic4():
    return generate_synthetic(4, 400, seed=0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "ACCEPTANCE_RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
