/** SVG rendering of a graph export.
 *
 * Pure string generation: layout and drawing are deterministic functions of
 * the export plus view state, so the renderer is testable without a DOM and
 * the same export always produces the same picture.
 *
 * Colour and line conventions: timestamps red, addresses blue, identities
 * green, sizes orange; proposed edges dashed, confirmed solid, rejected
 * only drawn when the toggle is on.
 */

import type { GraphViewState } from "./state.js";
import { isExcluded, visibleElements } from "./state.js";
import type { GraphEdge, GraphNode } from "./types.js";

export const KIND_COLORS: Record<string, string> = {
  timestamp: "#d0342c",
  ipv4: "#2d6cdf",
  mac: "#2d6cdf",
  username: "#2e9e4f",
  email: "#2e9e4f",
  process_name: "#2e9e4f",
  file_size: "#e8890c",
  port: "#6b4fd8",
  protocol: "#6b4fd8",
  file_name: "#a26b2b",
};

const ENTITY_COLOR = "#4a4a4a";
const FALLBACK_COLOR = "#8a8a8a";
const EXCLUDED_COLOR = "#c9c9c9";

export const EDGE_STYLES: Record<string, { dash: string; color: string }> = {
  proposed: { dash: "6 4", color: "#e8a013" },
  confirmed: { dash: "", color: "#2e9e4f" },
  rejected: { dash: "2 5", color: "#b0b0b0" },
};

export interface Point {
  x: number;
  y: number;
}

export class MalformedExportError extends Error {}

function assertWellFormed(nodes: GraphNode[], edges: GraphEdge[]): void {
  const ids = new Set<string>();
  for (const node of nodes) {
    if (!node.id || (node.node_type !== "entity" && node.node_type !== "attribute")) {
      throw new MalformedExportError(`bad node ${JSON.stringify(node.id)}`);
    }
    if (ids.has(node.id)) {
      throw new MalformedExportError(`duplicate node id ${node.id}`);
    }
    ids.add(node.id);
  }
  for (const edge of edges) {
    for (const end of edge.endpoints) {
      if (!ids.has(end)) {
        throw new MalformedExportError(
          `edge ${edge.id} references unknown node ${end}`,
        );
      }
    }
  }
}

/** Deterministic layout: entities on a ring, attributes orbiting their owner. */
export function layoutGraph(
  nodes: GraphNode[],
  width = 960,
  height = 640,
): Map<string, Point> {
  const positions = new Map<string, Point>();
  const entities = nodes
    .filter((n) => n.node_type === "entity")
    .sort((a, b) => a.id.localeCompare(b.id));
  const cx = width / 2;
  const cy = height / 2;
  const ringRadius = Math.min(width, height) / 2 - 110;
  entities.forEach((entity, i) => {
    const angle = (2 * Math.PI * i) / Math.max(entities.length, 1);
    positions.set(entity.id, {
      x: cx + ringRadius * Math.cos(angle),
      y: cy + ringRadius * Math.sin(angle),
    });
  });
  for (const entity of entities) {
    const center = positions.get(entity.id)!;
    const attrs = nodes
      .filter((n) => n.node_type === "attribute" && n.owner === entity.id)
      .sort((a, b) => a.id.localeCompare(b.id));
    attrs.forEach((attr, i) => {
      const angle = (2 * Math.PI * i) / Math.max(attrs.length, 1);
      positions.set(attr.id, {
        x: center.x + 64 * Math.cos(angle),
        y: center.y + 64 * Math.sin(angle),
      });
    });
  }
  // Attributes whose owner vanished still need a spot (defensive).
  nodes
    .filter((n) => !positions.has(n.id))
    .forEach((n, i) => positions.set(n.id, { x: 30 + i * 20, y: 20 }));
  return positions;
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function nodeColor(
  graph: { nodes: GraphNode[] },
  node: GraphNode,
): string {
  if (isExcluded({ ...graph, case_id: "", version: 0, edges: [] }, node)) {
    return EXCLUDED_COLOR;
  }
  if (node.node_type === "entity") return ENTITY_COLOR;
  return KIND_COLORS[node.kind] ?? FALLBACK_COLOR;
}

export function renderGraphSvg(
  state: GraphViewState,
  width = 960,
  height = 640,
): string {
  if (!state.graph || state.graph.nodes.length === 0) {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" role="img"><text x="${width / 2}" y="${height / 2}" ` +
      `text-anchor="middle" class="empty-state">No evidence loaded yet</text></svg>`
    );
  }
  const { nodes, edges } = visibleElements(state);
  assertWellFormed(state.graph.nodes, state.graph.edges);
  const positions = layoutGraph(nodes, width, height);
  const selectedNodes = new Set(state.selection.nodes);
  const selectedEdges = new Set(state.selection.edges);

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" role="img" data-version="${state.graph.version}">`,
  ];

  for (const edge of edges) {
    const a = positions.get(edge.endpoints[0]);
    const b = positions.get(edge.endpoints[1]);
    if (!a || !b) continue;
    const style = EDGE_STYLES[edge.status];
    const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
    const stroke = selectedEdges.has(edge.id) ? 4 : 2;
    parts.push(
      `<line data-edge="${esc(edge.id)}" data-status="${edge.status}" ` +
        `x1="${a.x.toFixed(1)}" y1="${a.y.toFixed(1)}" ` +
        `x2="${b.x.toFixed(1)}" y2="${b.y.toFixed(1)}" ` +
        `stroke="${style.color}" stroke-width="${stroke}"${dash}/>`,
    );
  }

  for (const node of nodes) {
    const p = positions.get(node.id)!;
    const color = nodeColor(state.graph, node);
    const radius = node.node_type === "entity" ? 22 : 12;
    const outline = selectedNodes.has(node.id)
      ? ` stroke="#111" stroke-width="3"`
      : "";
    parts.push(
      `<g data-node="${esc(node.id)}" data-node-type="${node.node_type}">` +
        `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="${radius}" ` +
        `fill="${color}"${outline}/>` +
        `<text x="${p.x.toFixed(1)}" y="${(p.y + radius + 12).toFixed(1)}" ` +
        `text-anchor="middle" font-size="10">${esc(node.label)}</text></g>`,
    );
  }

  parts.push("</svg>");
  return parts.join("\n");
}
