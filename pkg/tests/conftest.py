import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from corpus import corpus, megapixel_frame  # noqa: E402

from rpcodec import CodecConfig, encode_frame  # noqa: E402

QPS = (22, 32, 37)

_acceptance: dict = {}


@pytest.fixture(scope="session")
def corpus_frames():
    return corpus()


@pytest.fixture(scope="session")
def encoded_corpus(corpus_frames):
    """{(name, qp): EncodeResult} for every corpus image at qp 22, 32, 37."""
    return {(name, qp): encode_frame(frame, CodecConfig(qp=qp))
            for qp in QPS for name, frame in corpus_frames}


@pytest.fixture(scope="session")
def megapixel():
    return megapixel_frame()


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(key, passed, detail):
        _acceptance[key] = (bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(_acceptance, key=lambda k: int(k.split()[0].lstrip("C"))):
        passed, detail = _acceptance[key]
        tr.write_line(f"{'PASS' if passed else 'FAIL'}  {key}: {detail}")
