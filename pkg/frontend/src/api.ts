/** Thin typed client for the gateway /v1 API.
 *
 * The console holds no authoritative state: every displayed fact comes from
 * these endpoints, and the only mutations are run submission and the two
 * approval decisions.
 */

import type {
  ApprovalCard,
  AuditPage,
  ChainVerification,
  IncidentDetail,
  Incident,
  PackageState,
  RoleInfo,
  RunState,
  SimulationParams,
  SimulationResult,
} from './types.js';

export class GatewayError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'GatewayError';
  }
}

export interface ClientOptions {
  baseUrl: string;
  token?: string;
  fetchFn?: typeof fetch;
}

export class GatewayClient {
  private readonly baseUrl: string;
  private readonly token: string | undefined;
  private readonly fetchFn: typeof fetch;

  constructor(options: ClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/+$/, '');
    this.token = options.token;
    this.fetchFn = options.fetchFn ?? fetch;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { 'content-type': 'application/json' };
    if (this.token) {
      headers['x-session-token'] = this.token;
    }
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    let parsed: unknown = null;
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      parsed = { error: text };
    }
    if (!response.ok) {
      const message =
        parsed && typeof parsed === 'object' && 'error' in parsed
          ? String((parsed as { error: unknown }).error)
          : `HTTP ${response.status}`;
      throw new GatewayError(response.status, message);
    }
    return parsed as T;
  }

  submitFixture(fixture: string): Promise<{ run_id: string }> {
    return this.request('POST', '/v1/runs', { fixture });
  }

  run(runId: string): Promise<RunState> {
    return this.request('GET', `/v1/runs/${runId}`);
  }

  pendingApprovals(): Promise<ApprovalCard[]> {
    return this.request<{ pending: ApprovalCard[] }>('GET', '/v1/approvals/pending').then((d) => d.pending);
  }

  decide(packageId: string, decision: 'approve' | 'block'): Promise<PackageState> {
    return this.request('POST', `/v1/approvals/${packageId}`, { decision });
  }

  packageState(packageId: string): Promise<PackageState> {
    return this.request('GET', `/v1/packages/${packageId}`);
  }

  incidents(): Promise<Incident[]> {
    return this.request<{ incidents: Incident[] }>('GET', '/v1/incidents').then((d) => d.incidents);
  }

  incident(incidentId: string): Promise<IncidentDetail> {
    return this.request('GET', `/v1/incidents/${incidentId}`);
  }

  audit(fromSeq: number, limit: number): Promise<AuditPage> {
    return this.request('GET', `/v1/audit?from_seq=${fromSeq}&limit=${limit}`);
  }

  auditVerify(): Promise<ChainVerification> {
    return this.request('GET', '/v1/audit/verify');
  }

  roles(): Promise<RoleInfo[]> {
    return this.request<{ roles: RoleInfo[] }>('GET', '/v1/roles').then((d) => d.roles);
  }

  simulate(params: SimulationParams): Promise<SimulationResult> {
    return this.request('POST', '/v1/simulate', params);
  }
}
