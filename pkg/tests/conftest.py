import pytest

from ibetls.kem import IdentityString, KemParams, extract, setup

SETUP_SEED = bytes.fromhex(
    "6265656663616665" * 4  # fixed test seed, nothing up the sleeve
)

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, description: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    line = f"criterion {number:2d}: {status} - {description}{suffix}"
    ACCEPTANCE_LINES.append(line)
    print(f"[ACCEPTANCE] {line}")
    assert passed, line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def desk():
    return KemParams.desk()


@pytest.fixture(scope="session")
def master(desk):
    return setup(desk, SETUP_SEED)


@pytest.fixture(scope="session")
def mpk(master):
    return master[0]


@pytest.fixture(scope="session")
def msk(master):
    return master[1]


@pytest.fixture(scope="session")
def server_identity():
    return IdentityString.parse("kube-apiserver.20250101")


@pytest.fixture(scope="session")
def client_identity():
    return IdentityString.parse("kubelet:node-01.20250101")


@pytest.fixture(scope="session")
def server_key(msk, mpk, server_identity):
    return extract(msk, mpk, server_identity)


@pytest.fixture(scope="session")
def client_key(msk, mpk, client_identity):
    return extract(msk, mpk, client_identity)
