"""Document-browser module tests: the state machine, visible-function sets,
paging, link following, and form submission."""

import os

import pytest

from agenttree.rpc.client import ModuleError, ModuleRegistry
from agenttree.rpc.docbrowser import DocBrowserServer, PAGE_LINES

CORPUS = os.path.join(os.path.dirname(__file__), "fixtures", "corpus")

START_SET = {"BROWSE"}
PAGE_LOADED_SET = {"SCROLL", "CLICK", "INPUT"}
INPUT_FILLED_SET = {"CLICK"}


@pytest.fixture
def browser(serve_module):
    server = DocBrowserServer(CORPUS)
    address = serve_module(server)
    registry = ModuleRegistry()
    descriptor = registry.load_module(address)
    yield registry, descriptor
    registry.close()


def _visible(descriptor):
    return {f.name for f in descriptor.visible_functions()}


def test_start_state_exposes_only_browse(browser):
    registry, descriptor = browser
    assert descriptor.current_state == "start"
    assert _visible(descriptor) == START_SET


def test_browse_transitions_to_page_loaded(browser):
    registry, descriptor = browser
    result = registry.invoke("docbrowser", "BROWSE", {"target": "index"})
    assert "Content of index" in result.text
    assert descriptor.current_state == "page_loaded"
    assert _visible(descriptor) == PAGE_LOADED_SET


def test_hidden_function_rejected_in_every_state(browser):
    registry, descriptor = browser
    # start: everything but BROWSE hidden
    for name in ("SCROLL", "CLICK", "INPUT"):
        with pytest.raises(ModuleError) as err:
            registry.invoke("docbrowser", name, {})
        assert "not available in state" in str(err.value)
    registry.invoke("docbrowser", "BROWSE", {"target": "index"})
    with pytest.raises(ModuleError):
        registry.invoke("docbrowser", "BROWSE", {"target": "index"})
    registry.invoke("docbrowser", "INPUT", {"field": "query", "text": "x"})
    assert descriptor.current_state == "input_filled"
    assert _visible(descriptor) == INPUT_FILLED_SET
    for name in ("BROWSE", "SCROLL", "INPUT"):
        with pytest.raises(ModuleError):
            registry.invoke("docbrowser", name, {})


def test_scroll_pages_through_long_document(browser):
    registry, _ = browser
    first = registry.invoke("docbrowser", "BROWSE", {"target": "setup"}).text
    assert "(page 1)" in first
    assert "Setup step 1:" in first
    second = registry.invoke("docbrowser", "SCROLL", {"direction": "down"}).text
    assert "(page 2)" in second
    assert f"Setup step {PAGE_LINES - 1}:" in second  # two header lines precede
    back = registry.invoke("docbrowser", "SCROLL", {"direction": "up"}).text
    assert "(page 1)" in back
    # scrolling above the first page clamps
    assert "(page 1)" in registry.invoke("docbrowser", "SCROLL", {"direction": "up"}).text


def test_click_follows_numbered_links(browser):
    registry, _ = browser
    index = registry.invoke("docbrowser", "BROWSE", {"target": "index"}).text
    assert "L1: [Setup guide](setup)" in index
    target = registry.invoke("docbrowser", "CLICK", {"link_id": "L1"}).text
    assert "Content of setup" in target
    back = registry.invoke("docbrowser", "CLICK", {"link_id": "L1"}).text
    assert "Content of index" in back


def test_click_bad_link_reports_count(browser):
    registry, _ = browser
    registry.invoke("docbrowser", "BROWSE", {"target": "troubleshooting"})
    with pytest.raises(ModuleError) as err:
        registry.invoke("docbrowser", "CLICK", {"link_id": "L9"})
    assert "page has 1 links" in str(err.value)


def test_input_then_submit_returns_to_page(browser):
    registry, descriptor = browser
    registry.invoke("docbrowser", "BROWSE", {"target": "index"})
    filled = registry.invoke("docbrowser", "INPUT", {"field": "query", "text": "setup"})
    assert "filled" in filled.text
    with pytest.raises(ModuleError):
        registry.invoke("docbrowser", "CLICK", {"link_id": "L1"})  # only submit works
    submitted = registry.invoke("docbrowser", "CLICK", {"link_id": "submit"})
    assert "Form submitted" in submitted.text
    assert "query" in submitted.text
    assert descriptor.current_state == "page_loaded"


def test_browse_unknown_document_lists_corpus(browser):
    registry, _ = browser
    with pytest.raises(ModuleError) as err:
        registry.invoke("docbrowser", "BROWSE", {"target": "nope"})
    message = str(err.value)
    assert "available" in message
    assert "index" in message and "setup" in message


def test_state_info_reports_document_and_page(browser):
    registry, _ = browser
    registry.invoke("docbrowser", "BROWSE", {"target": "setup"})
    registry.invoke("docbrowser", "SCROLL", {"direction": "down"})
    response = registry.query_state("docbrowser")
    assert response.meta == {"document": "setup", "page": 1}
