"""Bundled scripter module: shell execution inside a dedicated workspace.

Runs scripts under configurable CPU-time and output-size limits; stdout and
stderr are interleaved and a non-zero exit status is reported verbatim in the
result, never raised. The module also reports which workspace files each call
changed, so the core can track file ownership across agents.
"""

from __future__ import annotations

import os
import resource
import subprocess

from .server import ModuleServer, run_main
from .wire import FunctionDoc

TRUNCATION_NOTICE = "\n[output truncated: {limit}-byte cap reached]"
TIMEOUT_NOTICE = "\n[script killed: {limit}s wall-clock limit reached]"


class ScripterServer(ModuleServer):
    module_name = "scripter"
    functions = (
        FunctionDoc(
            name="BASH",
            params=(("script", "heredoc-body"),),
            doc=(
                "Run a shell script in the module workspace and return its "
                "combined stdout and stderr plus the exit status. Use this to "
                "execute commands, run code, or inspect files."
            ),
        ),
        FunctionDoc(
            name="WRITEFILE",
            params=(("path", "string"), ("content", "string")),
            doc=(
                "Write content to a file at a relative path inside the module "
                "workspace. Pass a variable name as the content argument to "
                "save stored data without repeating it."
            ),
        ),
    )

    def __init__(
        self,
        workspace: str,
        cpu_seconds: int = 30,
        wall_seconds: float = 60.0,
        output_cap: int = 1024 * 1024,
    ):
        super().__init__()
        self.workspace = os.path.abspath(workspace)
        os.makedirs(self.workspace, exist_ok=True)
        self.cpu_seconds = cpu_seconds
        self.wall_seconds = wall_seconds
        self.output_cap = output_cap

    def state_info(self) -> dict:
        return {"workspace": self.workspace, "files": self._listing()}

    def _listing(self) -> list[str]:
        try:
            return sorted(os.listdir(self.workspace))
        except OSError:
            return []

    def _snapshot(self) -> dict[str, tuple[int, int]]:
        snapshot = {}
        for root, _dirs, files in os.walk(self.workspace):
            for name in files:
                path = os.path.join(root, name)
                try:
                    stat = os.stat(path)
                except OSError:
                    continue
                rel = os.path.relpath(path, self.workspace)
                snapshot[rel] = (stat.st_mtime_ns, stat.st_size)
        return snapshot

    def handle(self, function: str, args: dict, blobs: dict) -> tuple[str, dict]:
        if function == "BASH":
            return self._bash(str(args.get("script", "")))
        if function == "WRITEFILE":
            return self._writefile(str(args.get("path", "")), args, blobs)
        raise ValueError(f"unhandled function {function}")

    def _bash(self, script: str) -> tuple[str, dict]:
        before = self._snapshot()

        def limits():
            resource.setrlimit(resource.RLIMIT_CPU, (self.cpu_seconds, self.cpu_seconds + 1))

        process = subprocess.Popen(
            ["bash", "-c", script],
            cwd=self.workspace,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            preexec_fn=limits,
        )
        timed_out = False
        try:
            output, _ = process.communicate(timeout=self.wall_seconds)
        except subprocess.TimeoutExpired:
            process.kill()
            output, _ = process.communicate()
            timed_out = True
        truncated = len(output) > self.output_cap
        text = output[: self.output_cap].decode("utf-8", errors="replace")
        if truncated:
            text += TRUNCATION_NOTICE.format(limit=self.output_cap)
        if timed_out:
            text += TIMEOUT_NOTICE.format(limit=self.wall_seconds)
        text += f"\n[exit status {process.returncode}]"

        after = self._snapshot()
        changed = sorted(
            rel for rel, sig in after.items() if before.get(rel) != sig
        )
        self._last_meta = {"files_changed": changed, "exit_status": process.returncode}
        return text, {}

    def _writefile(self, path: str, args: dict, blobs: dict) -> tuple[str, dict]:
        if not path or os.path.isabs(path) or ".." in path.split(os.sep):
            raise ValueError(f"path must be relative and inside the workspace: {path!r}")
        target = os.path.join(self.workspace, path)
        os.makedirs(os.path.dirname(target) or self.workspace, exist_ok=True)
        if "content" in blobs:
            content, _media = blobs["content"]
        else:
            content = str(args.get("content", "")).encode("utf-8")
        with open(target, "wb") as fh:
            fh.write(content)
        self._last_meta = {"files_changed": [path], "exit_status": 0}
        return f"wrote {len(content)} bytes to {path}", {}

    def state_meta(self) -> dict:
        return getattr(self, "_last_meta", {})

    # Include per-call file-change info in the invoke response meta.
    def _respond(self, request):
        self._last_meta = {}
        response = super()._respond(request)
        if request.op == "invoke" and response.ok and self._last_meta:
            merged = dict(response.meta)
            merged.update(self._last_meta)
            object.__setattr__(response, "meta", merged)
        return response


def main(argv=None) -> None:
    workspace = os.environ.get("SCRIPTER_WORKSPACE", os.path.join(os.getcwd(), "workspace"))
    run_main(ScripterServer(workspace), argv)


if __name__ == "__main__":
    main()
