/** Browser bootstrap: mounts the workbench against the serving origin.
 *
 * The page is stateless with respect to truth: a reload rebuilds the whole
 * view from GET /graph and GET /timeline alone.
 */

import { CaseApi } from "./api.js";
import { renderGraphSvg } from "./graphView.js";
import { selectEdge, selectNode, toggleFilter } from "./state.js";
import { buildRows, renderTimelineHtml } from "./timelineView.js";
import { validateProbe } from "./queryPanel.js";
import { Workbench } from "./workbench.js";

function mount(): void {
  const params = new URLSearchParams(window.location.search);
  const caseId = params.get("case") ?? "model-exfiltration-demo";
  const api = new CaseApi("", caseId, (url, init) => fetch(url, init));
  const bench = new Workbench(api, caseId);

  const graphEl = document.getElementById("graph")!;
  const timelineEl = document.getElementById("timeline")!;
  const bannerEl = document.getElementById("banner")!;
  const queryForm = document.getElementById("query-form") as HTMLFormElement;
  const queryOut = document.getElementById("query-results")!;

  function redraw(): void {
    graphEl.innerHTML = renderGraphSvg(bench.state);
    bannerEl.textContent =
      bench.state.staleBanner ?? bench.state.errorBanner ?? "";
    bannerEl.className = bench.state.staleBanner
      ? "banner stale"
      : bench.state.errorBanner
        ? "banner error"
        : "banner";
  }

  async function refreshTimeline(): Promise<void> {
    const { events } = await api.timeline();
    timelineEl.innerHTML = renderTimelineHtml(buildRows(events, null));
  }

  graphEl.addEventListener("click", (ev) => {
    const target = ev.target as Element;
    const edgeId = target.closest("[data-edge]")?.getAttribute("data-edge");
    const nodeId = target
      .closest("[data-node]")
      ?.getAttribute("data-node");
    if (edgeId) bench.state = selectEdge(bench.state, edgeId);
    else if (nodeId) bench.state = selectNode(bench.state, nodeId);
    redraw();
  });

  document.getElementById("toggle-proposed")?.addEventListener("click", () => {
    bench.state = toggleFilter(bench.state, "showProposed");
    redraw();
  });
  document.getElementById("toggle-rejected")?.addEventListener("click", () => {
    bench.state = toggleFilter(bench.state, "showRejected");
    redraw();
  });

  async function act(action: () => Promise<unknown>): Promise<void> {
    await action();
    redraw();
    await refreshTimeline();
  }

  document.getElementById("confirm-edge")?.addEventListener("click", () => {
    const edgeId = bench.state.selection.edges[0];
    if (edgeId) void act(() => bench.confirmEdge(edgeId));
  });
  document.getElementById("reject-edge")?.addEventListener("click", () => {
    const edgeId = bench.state.selection.edges[0];
    if (edgeId) void act(() => bench.rejectEdge(edgeId));
  });
  document.getElementById("exclude-node")?.addEventListener("click", () => {
    const nodeId = bench.state.selection.nodes[0];
    if (nodeId) void act(() => bench.excludeNode(nodeId));
  });

  queryForm?.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const kind = (queryForm.elements.namedItem("kind") as HTMLSelectElement)
      .value;
    const value = (queryForm.elements.namedItem("value") as HTMLInputElement)
      .value;
    const check = validateProbe(kind, value);
    if (!check.ok) {
      queryOut.innerHTML = `<p class="inline-error">${check.error}</p>`;
      return;
    }
    void api.query(kind, value).then(({ hits }) => {
      queryOut.innerHTML = hits.length
        ? `<ul>${hits
            .map((h) => `<li>${h.entity_id} (${h.entity_kind})</li>`)
            .join("")}</ul>`
        : `<p>No matches.</p>`;
    });
  });

  void bench.load().then(() => {
    redraw();
    return refreshTimeline();
  });
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", mount);
}
