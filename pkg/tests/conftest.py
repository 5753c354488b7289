import pytest

from hahn.dataset import synthetic_images, write_cifar_dir


@pytest.fixture(scope="session")
def synthetic_cifar(tmp_path_factory):
    """A tiny dataset in the official binary layout."""
    root = tmp_path_factory.mktemp("cifar") / "cifar-10-batches-bin"
    write_cifar_dir(root, synthetic_images(60, seed=0), synthetic_images(20, seed=1))
    return root


_verdicts = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    # a failure in setup or call decides the verdict; teardown never overrides it
    if report.when == "call" or report.failed:
        if report.failed or props["criterion"] not in _verdicts:
            _verdicts[props["criterion"]] = (report.passed, props["detail"], report)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_verdicts):
        passed, detail, report = _verdicts[criterion]
        if not passed and report.when == "setup":
            detail = str(report.longrepr).strip().splitlines()[-1]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
