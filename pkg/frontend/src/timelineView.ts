/** Timeline presentation: rows, the draggable suspicious-window highlight,
 * and HTML table rendering. All pure functions over the event list.
 */

import type { TimelineEvent } from "./types.js";

export interface TimelineWindow {
  from: number;
  to: number;
}

export interface TimelineRow {
  event: TimelineEvent;
  inWindow: boolean;
}

export function buildRows(
  events: TimelineEvent[],
  window: TimelineWindow | null,
): TimelineRow[] {
  const sorted = [...events].sort((a, b) => a.epoch - b.epoch);
  return sorted.map((event) => ({
    event,
    inWindow:
      window === null ||
      (window.from <= event.epoch && event.epoch <= window.to),
  }));
}

/** Clamp a dragged window to the span of the events, keeping from <= to. */
export function clampWindow(
  window: TimelineWindow,
  events: TimelineEvent[],
): TimelineWindow {
  if (events.length === 0) return window;
  const lo = Math.min(...events.map((e) => e.epoch));
  const hi = Math.max(...events.map((e) => e.epoch));
  const from = Math.max(lo, Math.min(window.from, hi));
  const to = Math.max(from, Math.min(window.to, hi));
  return { from, to };
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export function renderTimelineHtml(rows: TimelineRow[]): string {
  if (rows.length === 0) {
    return `<p class="empty-state">No dated events in this case.</p>`;
  }
  const cells = rows
    .map((row) => {
      const cls = row.inWindow ? "timeline-row in-window" : "timeline-row";
      const e = row.event;
      return (
        `<tr class="${cls}" data-entity="${esc(e.entity_id)}">` +
        `<td>${esc(e.date)}</td><td>${esc(e.time)}</td>` +
        `<td>${esc(e.timestamp_attribute)}</td><td>${esc(e.category)}</td>` +
        `<td>${esc(e.type)}</td><td>${esc(e.attribute)}</td>` +
        `<td>${esc(e.value)}</td><td>${esc(e.metadata_source)}</td></tr>`
      );
    })
    .join("\n");
  return (
    `<table class="timeline"><thead><tr>` +
    `<th>Date</th><th>Time</th><th>Timestamp</th><th>Category</th>` +
    `<th>Type</th><th>Attribute</th><th>Value</th><th>Source</th>` +
    `</tr></thead><tbody>\n${cells}\n</tbody></table>`
  );
}
