import { describe, expect, it } from "vitest";

import {
  buildRows,
  clampWindow,
  renderTimelineHtml,
} from "../src/timelineView.js";
import type { TimelineEvent } from "../src/types.js";
import timelineFixture from "./fixtures/timeline.json";

const events = (timelineFixture as { events: TimelineEvent[] }).events;

describe("timeline rows", () => {
  it("renders all seven events of the demo case", () => {
    const rows = buildRows(events, null);
    expect(rows).toHaveLength(7);
    expect(rows.every((r) => r.inWindow)).toBe(true);
  });

  it("sorts chronologically regardless of input order", () => {
    const shuffled = [...events].reverse();
    const rows = buildRows(shuffled, null);
    const epochs = rows.map((r) => r.event.epoch);
    expect(epochs).toEqual([...epochs].sort((a, b) => a - b));
  });

  it("flags events inside the suspicious window", () => {
    const window = { from: events[0].epoch, to: events[5].epoch };
    const rows = buildRows(events, window);
    expect(rows.filter((r) => r.inWindow)).toHaveLength(6);
    expect(rows[rows.length - 1].inWindow).toBe(false);
    expect(rows[rows.length - 1].event.type).toBe("Incident detection");
  });

  it("clamps a dragged window to the event span", () => {
    const clamped = clampWindow({ from: 0, to: 99999999999 }, events);
    expect(clamped.from).toBe(Math.min(...events.map((e) => e.epoch)));
    expect(clamped.to).toBe(Math.max(...events.map((e) => e.epoch)));
  });

  it("keeps from <= to after clamping", () => {
    const clamped = clampWindow(
      { from: events[6].epoch + 100, to: events[0].epoch },
      events,
    );
    expect(clamped.from).toBeLessThanOrEqual(clamped.to);
  });
});

describe("timeline rendering", () => {
  it("renders one table row per event", () => {
    const html = renderTimelineHtml(buildRows(events, null));
    expect(html.match(/<tr class="timeline-row/g)).toHaveLength(7);
    expect(html).toContain("FinAI.h5");
    expect(html).toContain("Incident detection");
  });

  it("marks in-window rows for the highlight styling", () => {
    const window = { from: events[0].epoch, to: events[5].epoch };
    const html = renderTimelineHtml(buildRows(events, window));
    expect(html.match(/in-window/g)).toHaveLength(6);
  });

  it("shows an empty state without events", () => {
    expect(renderTimelineHtml([])).toContain("empty-state");
  });

  it("escapes HTML in values", () => {
    const nasty = [
      { ...events[0], value: '<img src=x onerror="pwn()">' },
    ];
    const html = renderTimelineHtml(buildRows(nasty, null));
    expect(html).not.toContain("<img");
    expect(html).toContain("&lt;img");
  });
});
