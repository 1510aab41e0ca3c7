import { ApiClient, ApiError } from "./api";
import {
  renderAudit,
  renderErrorBanner,
  renderModelPanel,
  renderPrototypeReport,
  renderQueryCard,
} from "./render";
import { WorkbenchSession, modelPanels } from "./workbench";

const client = new ApiClient("");
const session = new WorkbenchSession(client);

const app = document.getElementById("app")!;

function build(): void {
  app.innerHTML = "";

  const controls = document.createElement("div");
  controls.className = "controls";

  const taskSelect = document.createElement("select");
  taskSelect.id = "task-select";
  const tasks = [...new Set(session.state.models.map((m) => m.task))];
  for (const task of tasks) {
    const opt = document.createElement("option");
    opt.value = task;
    opt.textContent = task;
    if (task === session.state.task) opt.selected = true;
    taskSelect.appendChild(opt);
  }
  taskSelect.addEventListener("change", () => {
    session.setTask(taskSelect.value);
    build();
  });
  controls.appendChild(taskSelect);

  const modelBoxes = document.createElement("span");
  modelBoxes.className = "model-boxes";
  for (const info of session.state.models.filter((m) => m.task === session.state.task)) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = info.model;
    box.checked = session.state.selectedModels.includes(info.model);
    box.addEventListener("change", () => {
      const next = session.state.selectedModels.filter((m) => m !== info.model);
      if (box.checked) next.push(info.model);
      session.setSelectedModels(next);
    });
    label.appendChild(box);
    label.appendChild(document.createTextNode(info.model));
    modelBoxes.appendChild(label);
  }
  controls.appendChild(modelBoxes);

  const kInput = document.createElement("input");
  kInput.type = "number";
  kInput.min = "1";
  kInput.max = "25";
  kInput.value = String(session.state.k);
  kInput.title = "neighbors per model";
  kInput.addEventListener("change", () => session.setK(Number(kInput.value)));
  controls.appendChild(kInput);

  const memeInput = document.createElement("input");
  memeInput.type = "text";
  memeInput.id = "meme-id";
  memeInput.placeholder = "meme id";
  controls.appendChild(memeInput);

  const explainBtn = document.createElement("button");
  explainBtn.id = "explain";
  explainBtn.textContent = "explain";
  explainBtn.addEventListener("click", () => void explain(memeInput.value.trim()));
  controls.appendChild(explainBtn);

  const flagBtn = document.createElement("button");
  flagBtn.textContent = "flag";
  flagBtn.className = "verdict-flag";
  flagBtn.addEventListener("click", () => void decide("flag"));
  controls.appendChild(flagBtn);

  const allowBtn = document.createElement("button");
  allowBtn.textContent = "allow";
  allowBtn.className = "verdict-allow";
  allowBtn.addEventListener("click", () => void decide("allow"));
  controls.appendChild(allowBtn);

  app.appendChild(controls);

  if (session.state.error !== null) {
    app.appendChild(
      renderErrorBanner(session.state.error, () => {
        session.state.error = null;
        void bootstrap();
      }),
    );
  }

  const expl = session.state.explanation;
  if (expl) {
    app.appendChild(renderQueryCard(expl.entry));
    const panels = document.createElement("div");
    panels.className = "panels";
    const highlight = Object.keys(expl.entry.labels)[0] ?? null;
    for (const panel of modelPanels(expl, highlight)) {
      panels.appendChild(renderModelPanel(panel));
    }
    app.appendChild(panels);

    const drawerBtn = document.createElement("button");
    drawerBtn.textContent = "prototype report";
    drawerBtn.addEventListener("click", () => void showPrototypes());
    app.appendChild(drawerBtn);
  }

  const auditHeader = document.createElement("h3");
  auditHeader.textContent = `session decisions (${session.state.audit.length})`;
  app.appendChild(auditHeader);
  app.appendChild(renderAudit(session.state.audit));
}

async function explain(memeId: string): Promise<void> {
  if (!memeId) return;
  try {
    await session.explain(memeId);
  } catch (err) {
    session.state.error = err instanceof ApiError ? err.message : String(err);
  }
  build();
}

async function decide(verdict: "flag" | "allow"): Promise<void> {
  const memeId = session.state.explanation?.meme_id;
  if (!memeId) return;
  try {
    await session.decide(memeId, verdict);
  } catch (err) {
    session.state.error = err instanceof ApiError ? err.message : String(err);
  }
  build();
}

async function showPrototypes(): Promise<void> {
  const expl = session.state.explanation;
  if (!expl || session.state.selectedModels.length === 0) return;
  try {
    const reports = await client.prototypes(expl.task, session.state.selectedModels[0]!);
    const existing = document.querySelector(".prototype-report");
    if (existing) existing.remove();
    app.appendChild(renderPrototypeReport(reports));
  } catch (err) {
    session.state.error = err instanceof ApiError ? err.message : String(err);
    build();
  }
}

async function bootstrap(): Promise<void> {
  try {
    await session.loadModels();
  } catch (err) {
    session.state.error = err instanceof ApiError ? err.message : String(err);
  }
  build();
}

void bootstrap();
