import numpy as np
import pytest

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"\nCRITERION {number}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def camera():
    from histmark.corpus import builtin_image

    return builtin_image("camera")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def textured(rng):
    """A 128x128 image with blobs and noise: enough texture for feature points."""
    rows, cols = np.indices((128, 128))
    img = 100 + 60 * np.sin(rows / 9.0) * np.cos(cols / 13.0) + rng.normal(0, 12, (128, 128))
    return np.clip(img, 0, 255).astype(np.uint8)
