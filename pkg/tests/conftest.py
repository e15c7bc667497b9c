import pytest

ACCEPTANCE_LINES = []  # filled by test_acceptance, echoed in the terminal summary


def pytest_addoption(parser):
    parser.addoption("--run-extended", action="store_true", default=False,
                     help="run long benchmark tests (hours of compute)")
    parser.addoption("--icews14", default=None,
                     help="directory holding ICEWS14 train.txt / valid.txt / test.txt")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-extended"):
        return
    skip = pytest.mark.skip(reason="extended run; pass --run-extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
