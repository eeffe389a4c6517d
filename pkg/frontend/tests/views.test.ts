import { describe, expect, it } from 'vitest';

import { renderApprovalCard, renderQueue, type ApprovalQueueState } from '../src/approvals.js';
import { renderAuditPage, renderAuditRow, renderVerification, type AuditBrowserState } from '../src/audit.js';
import { buildTimeline, renderIncidentList, renderIncidentTimeline } from '../src/incidents.js';
import { renderSimulationResult } from '../src/simulate.js';
import { escapeHtml, shortHash } from '../src/render.js';
import type { ApprovalCard, AuditRecord, Incident, IncidentDetail } from '../src/types.js';

const card: ApprovalCard = {
  package_id: 'pkg-0002',
  run_id: 'run-0001',
  from_role: 'envita-worker',
  to_role: 'diva-publisher',
  irreversible: true,
  artifacts: [{ name: 'layer-01.geojson', digest: 'abc123', storage_ref: 'cas://abc123' }],
  gate_outcomes: [
    {
      validator_id: 'v-lat-bounds',
      verdict: 'fail',
      offending_items: [['station-0001', 'latitude', -81.2]],
      ran_at: 10,
      input_digest: 'dd',
    },
    {
      validator_id: 'v-schema-station',
      verdict: 'pass',
      offending_items: [],
      ran_at: 11,
      input_digest: 'dd',
    },
  ],
};

function incident(id: string, kind: string, status: Incident['status'] = 'verified'): Incident {
  return {
    id,
    opened_at: 5,
    boundary_point: 'pre:skill-publish-station-layers',
    defect_class: kind === 'detection' ? 'v-lat-bounds+v-lon-bounds' : kind,
    impacted_scope: { count: kind === 'detection' ? 2452 : 5, unit: kind === 'detection' ? 'stations' : 'files' },
    status,
    resolution_chain: ['ISS-001', 'ISS-002', 'ISS-003'],
    kind,
    metrics: { detection_latency: 60, user_exposure: 0, irreversible_commits_prevented: '1/1' },
  };
}

describe('approval cards', () => {
  it('renders gate evidence with offending values above the actions', () => {
    const html = renderApprovalCard(card, true);
    expect(html).toContain('v-lat-bounds');
    expect(html).toContain('-81.2');
    expect(html).toContain('irreversible');
    const evidenceIdx = html.indexOf('class="evidence"');
    const actionsIdx = html.indexOf('class="actions"');
    expect(evidenceIdx).toBeGreaterThan(-1);
    expect(actionsIdx).toBeGreaterThan(evidenceIdx);
  });

  it('renders approve/block buttons only for approve-capable sessions', () => {
    const withButtons = renderApprovalCard(card, true);
    expect(withButtons).toContain('data-action="approve"');
    expect(withButtons).toContain('data-action="block"');
    const readOnly = renderApprovalCard(card, false);
    expect(readOnly).not.toContain('data-action="approve"');
    expect(readOnly).toContain('read-only session');
  });

  it('renders the empty queue and banners', () => {
    const empty: ApprovalQueueState = { cards: [], canApprove: true, banner: null, loaded: true };
    expect(renderQueue(empty)).toContain('No packages awaiting approval');
    const banner: ApprovalQueueState = { ...empty, banner: 'Insufficient privilege' };
    expect(renderQueue(banner)).toContain('Insufficient privilege');
  });

  it('escapes hostile content', () => {
    const hostile: ApprovalCard = {
      ...card,
      package_id: '<script>alert(1)</script>',
    };
    const html = renderApprovalCard(hostile, true);
    expect(html).not.toContain('<script>alert');
    expect(html).toContain('&lt;script&gt;');
  });
});

describe('incident timeline', () => {
  const detail: IncidentDetail = {
    ...incident('ISS-001', 'detection'),
    chain: [incident('ISS-001', 'detection'), incident('ISS-002', 'remediation'), incident('ISS-003', 'verification')],
  };

  it('builds a three-node detection/remediation/verification timeline', () => {
    const nodes = buildTimeline(detail);
    expect(nodes.map((n) => n.label)).toEqual(['detection', 'remediation', 'verification']);
    expect(nodes.map((n) => n.incident.id)).toEqual(['ISS-001', 'ISS-002', 'ISS-003']);
  });

  it('renders metrics including zero user exposure', () => {
    const html = renderIncidentTimeline({ detail, notFound: false, error: null });
    expect(html).toContain('user exposure');
    expect(html).toContain('<dd>0</dd>');
    expect(html).toContain('1/1');
    expect(html).toContain('status-verified');
  });

  it('renders a not-found view for unknown ids', () => {
    expect(renderIncidentTimeline({ detail: null, notFound: true, error: null })).toContain('not found');
  });

  it('renders a single-node timeline for an open incident', () => {
    const open = incident('ISS-009', 'detection', 'open');
    const html = renderIncidentTimeline({
      detail: { ...open, chain: [open] },
      notFound: false,
      error: null,
    });
    expect(html).toContain('status-open');
    expect((html.match(/timeline-node/g) ?? []).length).toBe(1);
  });

  it('renders the incident list', () => {
    expect(renderIncidentList([])).toContain('No incidents');
    expect(renderIncidentList([incident('ISS-001', 'detection')])).toContain('ISS-001');
  });
});

describe('audit browser', () => {
  const record: AuditRecord = {
    seq: 1,
    at: 1,
    actor: 'governance',
    event: 'workflow_event',
    payload: {},
    payload_digest: 'd'.repeat(64),
    prev_hash: '0'.repeat(64),
    hash: 'a'.repeat(64),
    wall_clock: '2026-08-08T00:00:00Z',
  };

  it('shows per-record actor, event, and short hash', () => {
    const html = renderAuditRow(record);
    expect(html).toContain('governance');
    expect(html).toContain('workflow_event');
    expect(html).toContain('aaaaaaaaaaaa…');
  });

  it('verification indicator states', () => {
    expect(renderVerification(null)).toContain('not verified');
    expect(renderVerification({ valid: true, first_bad_seq: null })).toContain('chain valid');
    expect(renderVerification({ valid: false, first_bad_seq: 57 })).toContain('INVALID at seq 57');
  });

  it('renders a retry affordance on errors', () => {
    const state: AuditBrowserState = {
      records: [],
      fromSeq: 1,
      limit: 25,
      total: 0,
      verification: null,
      error: 'network down',
    };
    const html = renderAuditPage(state);
    expect(html).toContain('retry');
    expect(html).toContain('network down');
  });
});

describe('simulation panel', () => {
  it('renders bands from a result', () => {
    const html = renderSimulationResult({
      busy: false,
      error: null,
      result: {
        params: { p: 0.95, n: 10, q: 0.9, k: 3 },
        trials: 100000,
        seed: 7,
        empirical_end_to_end_success: 0.60158,
        analytic_end_to_end_success: 0.598737,
        empirical_escape_rate: 0.001029,
        analytic_escape_rate: 0.001,
        error_bearing_trials: 39842,
        success_within_3sigma: true,
        escape_within_3sigma: true,
      },
    });
    expect(html).toContain('0.601580');
    expect(html).toContain('within 3&sigma;');
  });
});

describe('render helpers', () => {
  it('escapes html metacharacters', () => {
    expect(escapeHtml('<a href="x">&\'')).toBe('&lt;a href=&quot;x&quot;&gt;&amp;&#39;');
  });

  it('shortens long hashes only', () => {
    expect(shortHash('abc')).toBe('abc');
    expect(shortHash('a'.repeat(64))).toBe('a'.repeat(12) + '…');
  });
});
