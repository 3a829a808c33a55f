"""Bundled document browser: a state-machine tool over a local markdown corpus.

Demonstrates state-dependent action spaces: the visible function set changes
with the machine state, so the agent is only ever offered entry points that
are valid right now.

    start --BROWSE--> page_loaded --INPUT--> input_filled --CLICK--> page_loaded
"""

from __future__ import annotations

import os
import re

from .server import ModuleServer, run_main
from .wire import FunctionDoc

_LINK = re.compile(r"(?<!\!)\[([^\]\n]+)\]\(([^)\n]+)\)")

PAGE_LINES = 40


class DocBrowserServer(ModuleServer):
    module_name = "docbrowser"
    functions = (
        FunctionDoc(
            name="BROWSE",
            params=(("target", "string"),),
            doc="Open a document from the corpus by name and show its first page.",
            visible_in_states=frozenset({"start"}),
        ),
        FunctionDoc(
            name="SCROLL",
            params=(("direction", "string"),),
            doc="Scroll the loaded page up or down by one window.",
            visible_in_states=frozenset({"page_loaded"}),
        ),
        FunctionDoc(
            name="CLICK",
            params=(("link_id", "string"),),
            doc="Follow a numbered link on the page, or submit a filled input.",
            visible_in_states=frozenset({"page_loaded", "input_filled"}),
        ),
        FunctionDoc(
            name="INPUT",
            params=(("field", "string"), ("text", "string")),
            doc="Fill a named input field on the loaded page.",
            visible_in_states=frozenset({"page_loaded"}),
        ),
    )

    def __init__(self, corpus_dir: str):
        super().__init__()
        self.corpus_dir = os.path.abspath(corpus_dir)
        self.state = "start"
        self._doc: str | None = None
        self._lines: list[str] = []
        self._page = 0
        self._links: list[tuple[str, str]] = []  # (text, target)
        self._form: dict[str, str] = {}

    def state_info(self) -> dict:
        return {"document": self._doc, "page": self._page}

    def handle(self, function: str, args: dict, blobs: dict) -> tuple[str, dict]:
        if function == "BROWSE":
            return self._browse(str(args.get("target", ""))), {}
        if function == "SCROLL":
            return self._scroll(str(args.get("direction", "down"))), {}
        if function == "CLICK":
            return self._click(str(args.get("link_id", ""))), {}
        if function == "INPUT":
            field = str(args.get("field", ""))
            text = str(args.get("text", ""))
            self._form[field] = text
            self.state = "input_filled"
            return f"Input: field {field!r} filled ({len(text)} chars). CLICK(\"submit\") to submit.", {}
        raise ValueError(f"unhandled function {function}")

    def _load(self, target: str) -> str:
        name = target if target.endswith(".md") else target + ".md"
        path = os.path.join(self.corpus_dir, os.path.basename(name))
        if not os.path.isfile(path):
            available = sorted(
                f[:-3] for f in os.listdir(self.corpus_dir) if f.endswith(".md")
            )
            raise FileNotFoundError(
                f"no document {target!r} in corpus; available: {', '.join(available)}"
            )
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        self._doc = os.path.basename(name)[:-3]
        self._lines = text.splitlines()
        self._page = 0
        self._links = _LINK.findall(text)
        self.state = "page_loaded"
        return self._render_page()

    def _browse(self, target: str) -> str:
        return self._load(target)

    def _scroll(self, direction: str) -> str:
        last_page = max(0, (len(self._lines) - 1) // PAGE_LINES)
        if direction == "up":
            self._page = max(0, self._page - 1)
        else:
            self._page = min(last_page, self._page + 1)
        return self._render_page()

    def _click(self, link_id: str) -> str:
        if self.state == "input_filled":
            if link_id != "submit":
                raise ValueError('only CLICK("submit") is available with a filled input')
            submitted = dict(self._form)
            self._form.clear()
            self.state = "page_loaded"
            return f"Form submitted: {submitted}\n" + self._render_page()
        index = int(link_id[1:]) if link_id.startswith("L") else int(link_id)
        if not 1 <= index <= len(self._links):
            raise ValueError(f"no link {link_id!r}; page has {len(self._links)} links")
        _text, target = self._links[index - 1]
        return self._load(target)

    def _render_page(self) -> str:
        start = self._page * PAGE_LINES
        window = "\n".join(self._lines[start : start + PAGE_LINES])
        links = "\n".join(
            f"L{i}: [{text}]({target})" for i, (text, target) in enumerate(self._links, 1)
        )
        header = f"Content of {self._doc} (page {self._page + 1}):"
        return "\n".join(part for part in (header, window, "Links:" if links else "", links) if part)


def main(argv=None) -> None:
    corpus = os.environ.get("DOCBROWSER_CORPUS", os.path.join(os.getcwd(), "corpus"))
    run_main(DocBrowserServer(corpus), argv)


if __name__ == "__main__":
    main()
