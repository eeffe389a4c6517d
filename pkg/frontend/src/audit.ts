/** Paginated audit browser with a chain-verification indicator. */

import { GatewayClient } from './api.js';
import type { AuditRecord, ChainVerification } from './types.js';
import { escapeHtml, shortHash } from './render.js';

export interface AuditBrowserState {
  records: AuditRecord[];
  fromSeq: number;
  limit: number;
  total: number;
  verification: ChainVerification | null;
  error: string | null;
}

export class AuditBrowser {
  state: AuditBrowserState = { records: [], fromSeq: 1, limit: 25, total: 0, verification: null, error: null };

  constructor(
    private readonly client: GatewayClient,
    private readonly onChange: (state: AuditBrowserState) => void = () => {},
    limit = 25,
  ) {
    this.state.limit = limit;
  }

  async refresh(): Promise<void> {
    try {
      const page = await this.client.audit(this.state.fromSeq, this.state.limit);
      this.state.records = page.records;
      this.state.total = page.total;
      this.state.error = null;
    } catch (error) {
      this.state.error = String(error);
    }
    this.onChange(this.state);
  }

  async nextPage(): Promise<void> {
    if (this.state.fromSeq + this.state.limit <= this.state.total) {
      this.state.fromSeq += this.state.limit;
      await this.refresh();
    }
  }

  async prevPage(): Promise<void> {
    this.state.fromSeq = Math.max(1, this.state.fromSeq - this.state.limit);
    await this.refresh();
  }

  async verify(): Promise<void> {
    try {
      this.state.verification = await this.client.auditVerify();
      this.state.error = null;
    } catch (error) {
      this.state.error = String(error);
    }
    this.onChange(this.state);
  }
}

export function renderVerification(verification: ChainVerification | null): string {
  if (verification === null) {
    return '<span class="chain-unknown">chain not verified yet</span>';
  }
  if (verification.valid) {
    return '<span class="chain-valid">chain valid</span>';
  }
  return `<span class="chain-invalid">chain INVALID at seq ${verification.first_bad_seq}</span>`;
}

export function renderAuditRow(record: AuditRecord): string {
  return `
    <tr data-seq="${record.seq}">
      <td>${record.seq}</td>
      <td>${record.at}</td>
      <td>${escapeHtml(record.actor)}</td>
      <td>${escapeHtml(record.event)}</td>
      <td><code title="${escapeHtml(record.hash)}">${escapeHtml(shortHash(record.hash))}</code></td>
    </tr>`;
}

export function renderAuditPage(state: AuditBrowserState): string {
  if (state.error) {
    return `<div class="banner">${escapeHtml(state.error)} <button data-action="retry">retry</button></div>`;
  }
  const rows = state.records.map(renderAuditRow).join('');
  return `
    <div class="audit-toolbar">
      <button data-action="prev">&larr; newer-first</button>
      <span>records ${state.fromSeq}&ndash;${state.fromSeq + state.records.length - 1} of ${state.total}</span>
      <button data-action="next">older &rarr;</button>
      <button data-action="verify">verify chain</button>
      ${renderVerification(state.verification)}
    </div>
    <table class="audit-table">
      <thead><tr><th>seq</th><th>tick</th><th>actor</th><th>event</th><th>hash</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}
