// HTML rendering, pure string-in string-out so it is trivially testable.
// Label names and definitions come exclusively from the /labels payload.

import { LabelInfo, Prediction } from "./api.js";
import { SessionEntry } from "./store.js";
import { barWidthPercent, escapeHtml, formatProbability, formatTimestamp } from "./format.js";

export function renderBars(scores: Record<string, number>): string {
  const entries = Object.entries(scores).sort((a, b) => b[1] - a[1]);
  return entries
    .map(([name, value]) => {
      const width = barWidthPercent(value);
      return `
      <div class="bar-row">
        <div class="bar-label">${escapeHtml(name)}</div>
        <div class="bar-track"><div class="bar-fill" style="width:${width}%"></div></div>
        <div class="bar-value">${formatProbability(value)}</div>
      </div>`;
    })
    .join("");
}

export function renderVerdictCard(
  prediction: Prediction,
  info: LabelInfo | undefined,
): string {
  const definition = info ? escapeHtml(info.definition) : "";
  const structure = info?.argument_structure
    ? `<p class="structure"><span>Argument structure:</span> ${escapeHtml(info.argument_structure)}</p>`
    : "";
  const kind = info
    ? `<span class="kind kind-${escapeHtml(info.fallacy_type)}">${escapeHtml(
        info.fallacy_type.replace("_", " "),
      )}</span>`
    : "";
  return `
  <article class="verdict">
    <header>
      <h2>${escapeHtml(prediction.label)}</h2>
      ${kind}
    </header>
    <p class="definition">${definition}</p>
    ${structure}
    <div class="bars">${renderBars(prediction.scores)}</div>
    <footer class="meta">model ${escapeHtml(prediction.model_version)}</footer>
  </article>`;
}

export function renderHistory(entries: SessionEntry[]): string {
  if (entries.length === 0) {
    return `<p class="empty">No submissions yet.</p>`;
  }
  return entries
    .map(
      (entry, index) => `
    <li class="history-entry" data-index="${index}">
      <button type="button" class="history-load" data-index="${index}"
              title="Load into the editor">edit</button>
      <span class="history-label">${escapeHtml(entry.prediction.label)}</span>
      <span class="history-score">${formatProbability(
        entry.prediction.scores[entry.prediction.label] ?? 0,
      )}</span>
      <span class="history-time">${formatTimestamp(entry.timestamp)}</span>
      <p class="history-text">${escapeHtml(entry.submittedText)}</p>
    </li>`,
    )
    .join("");
}

export function renderError(message: string): string {
  return `<p class="error" role="alert">${escapeHtml(message)}</p>`;
}
