/** Author validation page: one sentence of context with the mention
 * highlighted, then confirm / amend / reject. The server owns all state;
 * a 410 from any call renders the expired-link screen. */

import { Amendments, ApiClient, ApiError, ValidationView } from "./api.js";
import { renderHighlighted } from "./highlight.js";

function screen(doc: Document, cssClass: string, title: string, detail: string): HTMLElement {
  const wrapper = doc.createElement("div");
  wrapper.className = cssClass;
  const heading = doc.createElement("h1");
  heading.textContent = title;
  wrapper.appendChild(heading);
  const text = doc.createElement("p");
  text.textContent = detail;
  wrapper.appendChild(text);
  return wrapper;
}

export function expiredScreen(doc: Document): HTMLElement {
  return screen(
    doc,
    "expired-screen",
    "Link expired or already used",
    "This validation link is no longer valid. If you still need to review the record, ask the repository to send a fresh one.",
  );
}

function doneScreen(doc: Document, state: string): HTMLElement {
  const label =
    state === "Rejected"
      ? "The record was rejected. Nothing will be registered."
      : "The software asset is confirmed and will be registered and archived.";
  return screen(doc, "done-screen", "Decision recorded", label);
}

function fieldRow(doc: Document, label: string, value: string | null): HTMLElement {
  const row = doc.createElement("div");
  row.className = "field-row";
  const dt = doc.createElement("span");
  dt.className = "field-label";
  dt.textContent = label;
  const dd = doc.createElement("span");
  dd.className = "field-value";
  dd.textContent = value ?? "—";
  row.append(dt, dd);
  return row;
}

export async function renderValidationPage(
  container: HTMLElement,
  api: ApiClient,
  token: string,
): Promise<void> {
  const doc = container.ownerDocument;
  container.textContent = "";

  let view: ValidationView;
  try {
    view = await api.getValidation(token);
  } catch (err) {
    if (err instanceof ApiError && err.status === 410) {
      container.appendChild(expiredScreen(doc));
    } else {
      container.appendChild(
        screen(doc, "error-banner", "Something went wrong", String(err)),
      );
    }
    return;
  }

  let submitted = false;
  const submit = async (decision: "confirm" | "amend" | "reject", amendments?: Amendments) => {
    if (submitted) return; // double-click safety: one state change only
    submitted = true;
    for (const b of container.querySelectorAll("button")) b.disabled = true;
    try {
      const result = await api.submitDecision(token, decision, amendments);
      container.textContent = "";
      container.appendChild(doneScreen(doc, result.state));
    } catch (err) {
      container.textContent = "";
      if (err instanceof ApiError && err.status === 410) {
        container.appendChild(expiredScreen(doc));
      } else {
        container.appendChild(
          screen(doc, "error-banner", "Submission failed", String(err)),
        );
        submitted = false;
      }
    }
  };

  const heading = doc.createElement("h1");
  heading.textContent = "Did this paper use this software?";
  container.appendChild(heading);

  const paper = doc.createElement("p");
  paper.className = "paper-title";
  paper.textContent = view.paper_title;
  container.appendChild(paper);

  container.appendChild(renderHighlighted(doc, view.sentence, view.mentions));

  const fields = doc.createElement("div");
  fields.className = "candidate-fields";
  fields.append(
    fieldRow(doc, "Software", view.candidate.name),
    fieldRow(doc, "Repository / URL", view.candidate.url),
    fieldRow(doc, "Version", view.candidate.version),
    fieldRow(doc, "Publisher", view.candidate.publisher),
  );
  container.appendChild(fields);

  const actions = doc.createElement("div");
  actions.className = "decision-actions";
  container.appendChild(actions);

  const confirmButton = doc.createElement("button");
  confirmButton.className = "confirm";
  confirmButton.textContent = "Confirm";
  confirmButton.addEventListener("click", () => void submit("confirm"));
  actions.appendChild(confirmButton);

  const amendButton = doc.createElement("button");
  amendButton.className = "amend";
  amendButton.textContent = "Amend…";
  actions.appendChild(amendButton);

  const rejectButton = doc.createElement("button");
  rejectButton.className = "reject";
  rejectButton.textContent = "Reject";
  rejectButton.addEventListener("click", () => void submit("reject"));
  actions.appendChild(rejectButton);

  const form = doc.createElement("form");
  form.className = "amend-form";
  form.hidden = true;
  const inputs: Record<string, HTMLInputElement> = {};
  for (const [key, label, value] of [
    ["name", "Software name", view.candidate.name],
    ["url", "Repository / URL", view.candidate.url],
    ["version", "Version", view.candidate.version],
  ] as const) {
    const wrapper = doc.createElement("label");
    wrapper.textContent = label;
    const input = doc.createElement("input");
    input.name = key;
    input.value = value ?? "";
    wrapper.appendChild(input);
    form.appendChild(wrapper);
    inputs[key] = input;
  }
  const submitAmend = doc.createElement("button");
  submitAmend.type = "submit";
  submitAmend.textContent = "Amend and confirm";
  form.appendChild(submitAmend);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    // only fields the author actually changed are amendments
    const original: Record<string, string> = {
      name: view.candidate.name ?? "",
      url: view.candidate.url ?? "",
      version: view.candidate.version ?? "",
    };
    const amendments: Amendments = {};
    for (const key of ["name", "url", "version"] as const) {
      const value = inputs[key]?.value.trim() ?? "";
      if (value && value !== original[key]) amendments[key] = value;
    }
    if (Object.keys(amendments).length === 0) {
      void submit("confirm");
    } else {
      void submit("amend", amendments);
    }
  });
  container.appendChild(form);

  amendButton.addEventListener("click", () => {
    form.hidden = !form.hidden;
  });
}
