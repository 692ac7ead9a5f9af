/** Shapes of the documents served by the case HTTP API. */

export type EdgeStatus = "proposed" | "confirmed" | "rejected";

export interface GraphNode {
  id: string;
  node_type: "entity" | "attribute";
  label: string;
  kind: string;
  role: string | null;
  value: unknown;
  excluded: boolean;
  /** entity nodes only */
  source_id?: string;
  record_id?: string;
  line_number?: number;
  annotations?: string[];
  /** attribute nodes only */
  owner?: string;
  raw_text?: string;
}

export interface GraphEdge {
  id: string;
  endpoints: [string, string];
  rule_id: string | null;
  stage: string;
  status: EdgeStatus;
  created_by: string;
  note: string;
}

export interface GraphExport {
  case_id: string;
  version: number;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface TimelineEvent {
  epoch: number;
  date: string;
  time: string;
  timestamp_attribute: "Created" | "Accessed";
  category: string;
  type: string;
  attribute: string;
  value: string;
  metadata_source: string;
  entity_id: string;
  attribute_node_id: string;
}

export interface QueryHit {
  entity_id: string;
  entity_kind: string;
  matched_attributes: string[];
}

export interface LinkPath {
  elements: string[];
  edge_ids: string[];
  hop_count: number;
}

export interface CaseSummary {
  case_id: string;
  title: string;
  version: number;
  sources: Array<{ source_id: string; display_name: string }>;
}
