/** Entry point: upload widgets, then hand the page to WorkbenchApp. */

import { WorkbenchClient } from "./api.js";
import { WorkbenchApp } from "./app.js";

function field(labelText: string, input: HTMLElement): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "upload-field";
  const span = document.createElement("span");
  span.textContent = labelText;
  wrap.appendChild(span);
  wrap.appendChild(input);
  return wrap;
}

export function mount(root: HTMLElement, baseUrl = ""): void {
  const client = new WorkbenchClient(baseUrl);

  const uploadPane = document.createElement("section");
  uploadPane.className = "upload-pane";

  const annotator = document.createElement("input");
  annotator.value = "annotator-1";
  const modelText = document.createElement("textarea");
  modelText.placeholder = '{"kind": "ref:linear", "weights": {...}}';
  const datasetText = document.createElement("textarea");
  datasetText.placeholder = 'one {"id", "text", "label"} JSON object per line';
  const startButton = document.createElement("button");
  startButton.textContent = "Upload and start session";
  const status = document.createElement("p");
  status.className = "upload-status";

  uploadPane.appendChild(field("annotator id", annotator));
  uploadPane.appendChild(field("model descriptor", modelText));
  uploadPane.appendChild(field("dataset (JSONL)", datasetText));
  uploadPane.appendChild(startButton);
  uploadPane.appendChild(status);

  const appRoot = document.createElement("div");
  appRoot.id = "workbench";
  root.appendChild(uploadPane);
  root.appendChild(appRoot);

  const app = new WorkbenchApp(client, appRoot);

  startButton.addEventListener("click", async () => {
    try {
      status.textContent = "uploading...";
      const model = await client.uploadModel(JSON.parse(modelText.value));
      const dataset = await client.uploadDataset(datasetText.value);
      status.textContent =
        `model ${model.model_id}, ${dataset.records} documents (${dataset.labels.join(", ")})`;
      await app.start(annotator.value || "annotator-1", model.model_id, dataset.dataset_id);
    } catch (err) {
      status.textContent = `upload failed: ${err instanceof Error ? err.message : err}`;
    }
  });
}

declare global {
  interface Window {
    mountWorkbench?: typeof mount;
  }
}

if (typeof window !== "undefined") {
  window.mountWorkbench = mount;
  const root = document.getElementById("root");
  if (root) mount(root);
}
