/** Repository-manager queue: pending records with approve/reject actions.
 * Every action calls the API and re-renders from server state. */

import { ApiClient, PendingRecord } from "./api.js";

function errorBanner(doc: Document, message: string): HTMLElement {
  const banner = doc.createElement("div");
  banner.className = "error-banner";
  banner.setAttribute("role", "alert");
  banner.textContent = message;
  return banner;
}

function candidateSummary(record: PendingRecord): string {
  const parts = [record.candidate.name ?? "(unnamed)"];
  if (record.candidate.version) parts.push(`v${record.candidate.version}`);
  if (record.candidate.publisher) parts.push(`by ${record.candidate.publisher}`);
  return parts.join(" ");
}

export async function renderManagerQueue(
  container: HTMLElement,
  api: ApiClient,
): Promise<void> {
  const doc = container.ownerDocument;
  container.textContent = "";

  let records: PendingRecord[];
  try {
    records = await api.getPending();
  } catch (err) {
    container.appendChild(
      errorBanner(doc, `Could not load the approval queue: ${String(err)}`),
    );
    return;
  }

  const heading = doc.createElement("h1");
  heading.textContent = "Software mentions awaiting approval";
  container.appendChild(heading);

  if (records.length === 0) {
    const empty = doc.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "Nothing to review: the queue is empty.";
    container.appendChild(empty);
    return;
  }

  const list = doc.createElement("ul");
  list.className = "queue";
  for (const record of records) {
    const row = doc.createElement("li");
    row.className = "queue-row";
    row.dataset.recordId = record.record_id;

    const title = doc.createElement("div");
    title.className = "queue-paper";
    title.textContent = record.paper_title;
    row.appendChild(title);

    const candidate = doc.createElement("div");
    candidate.className = "queue-candidate";
    candidate.textContent = candidateSummary(record);
    row.appendChild(candidate);

    const sentence = doc.createElement("blockquote");
    sentence.className = "queue-sentence";
    sentence.textContent = record.sentence;
    row.appendChild(sentence);

    const actions = doc.createElement("div");
    actions.className = "queue-actions";
    row.appendChild(actions);

    const act = (label: string, cssClass: string, call: () => Promise<unknown>) => {
      const button = doc.createElement("button");
      button.textContent = label;
      button.className = cssClass;
      button.addEventListener("click", async () => {
        for (const b of actions.querySelectorAll("button")) b.disabled = true;
        try {
          await call();
        } catch (err) {
          container.insertBefore(
            errorBanner(doc, `Action failed: ${String(err)}`),
            container.firstChild,
          );
        }
        await renderManagerQueue(container, api);
      });
      actions.appendChild(button);
    };
    act("Approve and route to author", "approve", () =>
      api.managerApprove(record.record_id),
    );
    act("Reject", "reject", () => api.managerReject(record.record_id));

    list.appendChild(row);
  }
  container.appendChild(list);
}
