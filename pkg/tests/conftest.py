import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stub_webdriver import StubWebDriver  # noqa: E402


@pytest.fixture
def stub_server():
    stub = StubWebDriver().start()
    yield stub
    stub.stop()


@pytest.fixture
def renderer(stub_server):
    from waffle.render import WebDriverClient

    client = WebDriverClient(base_url=stub_server.url)
    yield client
    client.close()
