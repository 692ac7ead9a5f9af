/** Client view state. The server is the only source of truth: this state
 * holds a loaded export plus presentation toggles, and knows when it has
 * gone stale relative to the server's version.
 */

import type { GraphExport, GraphNode, GraphEdge } from "./types.js";

export interface FilterToggles {
  showProposed: boolean;
  showRejected: boolean;
  showExcluded: boolean;
}

export interface GraphViewState {
  caseId: string;
  loadedVersion: number;
  graph: GraphExport | null;
  selection: { nodes: string[]; edges: string[] };
  filters: FilterToggles;
  activeProbe: { kind: string; value: string } | null;
  staleBanner: string | null;
  errorBanner: string | null;
}

export function initialState(caseId: string): GraphViewState {
  return {
    caseId,
    loadedVersion: -1,
    graph: null,
    selection: { nodes: [], edges: [] },
    filters: { showProposed: true, showRejected: false, showExcluded: false },
    activeProbe: null,
    staleBanner: null,
    errorBanner: null,
  };
}

export function loadGraph(
  state: GraphViewState,
  graph: GraphExport,
): GraphViewState {
  const ids = new Set(graph.nodes.map((n) => n.id));
  const edgeIds = new Set(graph.edges.map((e) => e.id));
  return {
    ...state,
    graph,
    loadedVersion: graph.version,
    // Selections must always refer to elements of the loaded export.
    selection: {
      nodes: state.selection.nodes.filter((id) => ids.has(id)),
      edges: state.selection.edges.filter((id) => edgeIds.has(id)),
    },
    staleBanner: null,
    errorBanner: null,
  };
}

export function markStale(
  state: GraphViewState,
  serverVersion: number,
): GraphViewState {
  if (serverVersion <= state.loadedVersion) return state;
  return {
    ...state,
    staleBanner:
      `Case moved to version ${serverVersion} ` +
      `(you are viewing ${state.loadedVersion}). Reload to continue.`,
  };
}

export function markError(
  state: GraphViewState,
  message: string,
): GraphViewState {
  return { ...state, errorBanner: message };
}

export function toggleFilter(
  state: GraphViewState,
  name: keyof FilterToggles,
): GraphViewState {
  return {
    ...state,
    filters: { ...state.filters, [name]: !state.filters[name] },
  };
}

export function selectNode(
  state: GraphViewState,
  nodeId: string,
): GraphViewState {
  if (!state.graph || !state.graph.nodes.some((n) => n.id === nodeId)) {
    return state;
  }
  return { ...state, selection: { nodes: [nodeId], edges: [] } };
}

export function selectEdge(
  state: GraphViewState,
  edgeId: string,
): GraphViewState {
  if (!state.graph || !state.graph.edges.some((e) => e.id === edgeId)) {
    return state;
  }
  return { ...state, selection: { nodes: [], edges: [edgeId] } };
}

/** Elements that survive the current filter toggles. */
export function visibleElements(state: GraphViewState): {
  nodes: GraphNode[];
  edges: GraphEdge[];
} {
  if (!state.graph) return { nodes: [], edges: [] };
  const { filters } = state;
  const nodes = state.graph.nodes.filter(
    (n) => filters.showExcluded || !isExcluded(state.graph!, n),
  );
  const nodeIds = new Set(nodes.map((n) => n.id));
  const edges = state.graph.edges.filter((e) => {
    if (e.status === "proposed" && !filters.showProposed) return false;
    if (e.status === "rejected" && !filters.showRejected) return false;
    return nodeIds.has(e.endpoints[0]) && nodeIds.has(e.endpoints[1]);
  });
  return { nodes, edges };
}

/** An attribute is effectively excluded when its owning entity is. */
export function isExcluded(graph: GraphExport, node: GraphNode): boolean {
  if (node.excluded) return true;
  if (node.node_type === "attribute" && node.owner) {
    const owner = graph.nodes.find((n) => n.id === node.owner);
    return owner ? owner.excluded : false;
  }
  return false;
}
