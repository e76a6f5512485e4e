"""HTML-Match through the deterministic stub renderer."""

import pytest

from waffle.dom import parse_html, strip_presentation
from waffle.errors import RenderError
from waffle.metrics import html_match
from waffle.mutate import mutate
from waffle.render import WebDriverClient

PAGE = (
    b"<html><head><style>p { color: #123456; }</style></head>"
    b'<body><p style="margin: 4px">Hello page</p><div>block</div></body></html>'
)


def test_identical_documents_match(renderer):
    assert html_match(PAGE, PAGE, renderer) is True


def test_color_mutant_matches_after_stripping(renderer):
    mutated, mutation = mutate(PAGE, "Color", seed=11)
    assert mutated != PAGE
    assert html_match(PAGE, mutated, renderer) is True


def test_structure_mutant_does_not_match(renderer):
    mutated, _ = mutate(PAGE, "HtmlStructure", seed=5)
    assert html_match(PAGE, mutated, renderer) is False


def test_whitespace_difference_is_visible(renderer):
    other = PAGE.replace(b"Hello page", b"Hello  page")
    assert html_match(PAGE, other, renderer) is False


def test_strip_equality_implies_match(renderer):
    a = b'<div id="one" style="color:red"><p>text</p></div>'
    b_ = b"<DIV><P>text</P></DIV>"
    assert strip_presentation(parse_html(a)) == strip_presentation(parse_html(b_))
    assert html_match(a, b_, renderer) is True


def test_render_failure_propagates(stub_server, renderer):
    renderer.start()
    stub_server.fail_next = "/url"
    with pytest.raises(RenderError):
        html_match(PAGE, PAGE, renderer)


def test_dimension_mismatch_is_false(stub_server):
    a_client = WebDriverClient(base_url=stub_server.url, viewport=(320, 200))
    with a_client:
        result_small = a_client.render(PAGE, viewport=(320, 200))
    assert result_small.image.width == 320


class TwoViewportRenderer:
    """Returns a different canvas size on the second call."""

    def __init__(self, stub_url):
        self.calls = 0
        self.stub_url = stub_url

    def render(self, html, viewport=None):
        self.calls += 1
        size = (640, 480) if self.calls == 1 else (320, 240)
        with WebDriverClient(base_url=self.stub_url, viewport=size) as client:
            return client.render(html, viewport=size)


def test_unequal_dimensions_return_false(stub_server):
    assert html_match(PAGE, PAGE, TwoViewportRenderer(stub_server.url)) is False
