/** Browser wiring: poll the log incrementally, merge the live tree view,
 * re-render, and forward the operator's pause/resume/inject actions. No
 * optimistic updates — everything on screen comes from confirmed server
 * responses. */

import { ControlClient } from "./api";
import { ViewModel } from "./model";
import { renderTranscript, renderTree } from "./views";
import "./style.css";

const POLL_INTERVAL_MS = 750;

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

export function startApp(apiBase: string): void {
  const client = new ControlClient(apiBase);
  const model = new ViewModel();
  let selected: number | null = null;
  let statusLine = "";

  const treePanel = el<HTMLDivElement>("tree");
  const transcriptPanel = el<HTMLDivElement>("transcript");
  const statusBar = el<HTMLDivElement>("status");
  const pauseButton = el<HTMLButtonElement>("pause");
  const resumeButton = el<HTMLButtonElement>("resume");
  const injectForm = el<HTMLFormElement>("inject-form");
  const targetPicker = el<HTMLSelectElement>("inject-target");
  const composer = el<HTMLInputElement>("inject-body");

  function renderTargets(): void {
    const options = ['<option value="active">active node</option>'];
    for (const { node } of model.outline()) {
      const label = node.childName ?? "root";
      options.push(`<option value="${node.nodeId}">[${node.nodeId}] ${label}</option>`);
    }
    const current = targetPicker.value || "active";
    targetPicker.innerHTML = options.join("");
    targetPicker.value = current;
  }

  function render(): void {
    treePanel.innerHTML = renderTree(model, selected);
    if (selected !== null) {
      transcriptPanel.innerHTML = renderTranscript(model, selected, apiBase);
    }
    statusBar.textContent =
      `${model.lastSeq + 1} events · ${model.nodes.size} nodes` +
      (model.paused ? " · PAUSED" : "") +
      (statusLine ? ` · ${statusLine}` : "");
    renderTargets();
  }

  treePanel.addEventListener("click", (event) => {
    const row = (event.target as HTMLElement).closest("[data-node]");
    if (row) {
      selected = Number((row as HTMLElement).dataset.node);
      render();
    }
  });

  pauseButton.addEventListener("click", async () => {
    statusLine = await client.pause();
    render();
  });
  resumeButton.addEventListener("click", async () => {
    statusLine = await client.resume();
    render();
  });
  injectForm.addEventListener("submit", async (event) => {
    event.preventDefault();
    const body = composer.value.trim();
    if (!body) return;
    const target = targetPicker.value;
    const ack = await client.inject(target, body);
    statusLine = ack;
    if (ack === "queued") {
      model.noteInjection(target, body);
      composer.value = "";
    }
    render();
  });

  async function poll(): Promise<void> {
    try {
      const [records, tree] = await Promise.all([
        client.logSince(model.lastSeq + 1),
        client.tree(),
      ]);
      model.applyBatch(records);
      model.mergeTree(tree);
      if (selected === null && model.nodes.size > 0) {
        selected = Math.min(...model.nodes.keys());
      }
      render();
    } catch (error) {
      statusLine = `connection error: ${String(error)}`;
      statusBar.textContent = statusLine;
    }
  }

  void poll();
  setInterval(() => void poll(), POLL_INTERVAL_MS);
}

if (typeof document !== "undefined" && document.getElementById("tree")) {
  const params = new URLSearchParams(window.location.search);
  startApp(params.get("api") ?? "");
}
