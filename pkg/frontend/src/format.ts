// Display formatting. Probabilities render with two decimals, matching the
// reporting convention used everywhere else in the workbench.

export function formatProbability(value: number): string {
  return value.toFixed(2);
}

export function barWidthPercent(value: number): number {
  return Math.max(0, Math.min(100, value * 100));
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function formatTimestamp(ms: number): string {
  return new Date(ms).toLocaleTimeString();
}
