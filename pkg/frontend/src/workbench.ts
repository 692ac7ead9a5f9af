/** The review loop: wires view state to the API.
 *
 * Every user action issues exactly one API call with the loaded version as a
 * precondition, then re-fetches the graph so the view always mirrors server
 * truth. A 409 leaves local state untouched apart from the stale banner.
 */

import { CaseApi, StaleVersionError, ApiError } from "./api.js";
import {
  GraphViewState,
  initialState,
  loadGraph,
  markError,
  markStale,
} from "./state.js";

export class Workbench {
  state: GraphViewState;

  constructor(private readonly api: CaseApi, caseId: string) {
    this.state = initialState(caseId);
  }

  async load(): Promise<GraphViewState> {
    const graph = await this.api.graph();
    this.state = loadGraph(this.state, graph);
    return this.state;
  }

  private async mutate(
    action: (expectedVersion: number) => Promise<unknown>,
  ): Promise<GraphViewState> {
    try {
      await action(this.state.loadedVersion);
    } catch (err) {
      if (err instanceof StaleVersionError) {
        const server = await this.api.summary();
        this.state = markStale(this.state, server.version);
        return this.state;
      }
      if (err instanceof ApiError) {
        this.state = markError(this.state, err.message);
        return this.state;
      }
      throw err;
    }
    return this.load();
  }

  confirmEdge(edgeId: string): Promise<GraphViewState> {
    return this.mutate((v) => this.api.confirmEdge(edgeId, v));
  }

  rejectEdge(edgeId: string): Promise<GraphViewState> {
    return this.mutate((v) => this.api.rejectEdge(edgeId, v));
  }

  resetEdge(edgeId: string): Promise<GraphViewState> {
    return this.mutate((v) => this.api.resetEdge(edgeId, v));
  }

  excludeNode(nodeId: string): Promise<GraphViewState> {
    return this.mutate((v) => this.api.excludeNode(nodeId, v));
  }

  includeNode(nodeId: string): Promise<GraphViewState> {
    return this.mutate((v) => this.api.includeNode(nodeId, v));
  }

  addManualEdge(a: string, b: string, note = ""): Promise<GraphViewState> {
    return this.mutate((v) => this.api.addManualEdge(a, b, note, v));
  }
}
