/** Wire types for the gateway /v1 API. */

export interface GateOutcome {
  validator_id: string;
  verdict: 'pass' | 'fail';
  offending_items: Array<[string, string, unknown]>;
  ran_at: number;
  input_digest: string;
}

export interface ArtifactRef {
  name: string;
  digest: string;
  storage_ref: string;
}

export interface ApprovalCard {
  package_id: string;
  run_id: string;
  from_role: string;
  to_role: string;
  irreversible: boolean;
  artifacts: ArtifactRef[];
  gate_outcomes: GateOutcome[];
}

export interface PackageState {
  id: string;
  run_id: string;
  from_role: string;
  to_role: string;
  phase: 'prepared' | 'validating' | 'approved' | 'committed' | 'blocked' | 'quarantined';
  artifacts: ArtifactRef[];
  incident_id: string | null;
  approval: { approver: string; at: number } | null;
}

export interface RunState {
  id: string;
  definition_id: string;
  status: 'running' | 'done' | 'blocked' | 'awaiting_approval';
  stage_status: string[];
  package_ids: string[];
  incident_id: string | null;
  awaiting_package: string | null;
}

export interface IncidentMetrics {
  detection_latency: number;
  user_exposure: number;
  irreversible_commits_prevented: string;
}

export interface Incident {
  id: string;
  opened_at: number;
  boundary_point: string;
  defect_class: string;
  impacted_scope: { count: number; unit: string };
  status: 'open' | 'remediated' | 'verified' | 'closed';
  resolution_chain: string[];
  kind: string;
  metrics: IncidentMetrics;
}

export interface IncidentDetail extends Incident {
  chain: Incident[];
}

export interface AuditRecord {
  seq: number;
  at: number;
  actor: string;
  event: string;
  payload: Record<string, unknown>;
  payload_digest: string;
  prev_hash: string;
  hash: string;
  wall_clock: string;
}

export interface AuditPage {
  records: AuditRecord[];
  total: number;
}

export interface ChainVerification {
  valid: boolean;
  first_bad_seq: number | null;
}

export interface RoleInfo {
  id: string;
  kind: string;
  capabilities: string[];
  zone: string;
}

export interface SimulationParams {
  p: number;
  n: number;
  q: number;
  k: number;
  trials: number;
  seed: number;
}

export interface SimulationResult {
  params: { p: number; n: number; q: number; k: number };
  trials: number;
  seed: number;
  empirical_end_to_end_success: number;
  analytic_end_to_end_success: number;
  empirical_escape_rate: number | null;
  analytic_escape_rate: number;
  error_bearing_trials: number;
  success_within_3sigma: boolean;
  escape_within_3sigma: boolean;
}

export interface ApiError {
  status: number;
  message: string;
}
