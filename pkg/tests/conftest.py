import pytest

from flashtriage import synth


@pytest.fixture(scope="session")
def dense():
    return synth.make_dense(1)


@pytest.fixture(scope="session")
def dense_image(dense):
    return dense.image(synth.DENSE_SIZE, device_model="HS175D")


@pytest.fixture(scope="session")
def sparse():
    return synth.make_sparse(7)


@pytest.fixture(scope="session")
def sparse_image(sparse):
    return sparse.image(synth.SPARSE_SIZE, device_model="HS720")


@pytest.fixture(scope="session")
def erased_image():
    return synth.make_erased_image(8 << 20, 190, 3)


# Acceptance criteria report one line each; the lines are repeated in the
# terminal summary so they survive output capture.
_ACCEPTANCE: list[str] = []


class _Criterion:
    def __init__(self, number: int, title: str) -> None:
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        detail = self.detail if exc_type is None else f"{exc_type.__name__}: {exc}".splitlines()[0]
        line = f"[{status}] criterion {self.number:>2}: {self.title}" + (f" ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
