import type { EmptyMatchDiagnostics, PredictResponse } from "./types.js";

const BEYOND = "beyond observed range";

/**
 * Summary panel: every displayed number is the verbatim response field
 * (String(value)); no survival math happens client-side.
 */
export function renderSummary(panel: HTMLElement, response: PredictResponse): void {
  panel.replaceChildren();
  const rows: Array<[string, string, string]> = [
    ["mean", "mean", show(response.mean)],
    ["median", "median", show(response.median)],
    ["q1", "lower quartile", show(response.q1)],
    ["q3", "upper quartile", show(response.q3)],
    ["match_count", "matching training records", String(response.match_count)],
  ];
  if (response.eta !== null) {
    rows.push(["eta", "averaged risk score", String(response.eta)]);
  }
  const list = document.createElement("dl");
  for (const [field, caption, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = caption;
    const dd = document.createElement("dd");
    dd.dataset.field = field;
    dd.textContent = value;
    list.appendChild(dt);
    list.appendChild(dd);
  }
  panel.appendChild(list);

  if (response.mean_truncated) {
    const note = document.createElement("p");
    note.className = "caveat";
    note.dataset.field = "mean_truncated";
    note.textContent =
      "mean excludes survival mass beyond the last observed event time";
    panel.appendChild(note);
  }
  if (response.dropped.length > 0) {
    const note = document.createElement("p");
    note.className = "caveat";
    note.dataset.field = "dropped";
    note.textContent = `relaxed constraints: ${response.dropped.join(", ")}`;
    panel.appendChild(note);
  }
}

export function renderEmptyMatch(
  panel: HTMLElement,
  diagnostics: EmptyMatchDiagnostics | undefined,
): void {
  panel.replaceChildren();
  const message = document.createElement("p");
  message.className = "empty-match";
  message.textContent = diagnostics
    ? `No training records match this combination. Try clearing ` +
      `${diagnostics.most_restrictive} to broaden the match.`
    : "No training records match this combination. Try clearing a selection.";
  panel.appendChild(message);
}

function show(value: number | null): string {
  return value === null ? BEYOND : String(value);
}
