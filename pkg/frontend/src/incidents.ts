/** Incident chain timelines: detection -> remediation -> verification, with
 * the three boundary metrics and links into the audit browser. */

import { GatewayClient, GatewayError } from './api.js';
import type { Incident, IncidentDetail } from './types.js';
import { escapeHtml } from './render.js';

export interface TimelineNode {
  incident: Incident;
  label: string;
}

export function buildTimeline(detail: IncidentDetail): TimelineNode[] {
  return detail.chain.map((incident) => ({
    incident,
    label: incident.kind || 'event',
  }));
}

export interface IncidentViewState {
  detail: IncidentDetail | null;
  notFound: boolean;
  error: string | null;
}

export class IncidentView {
  state: IncidentViewState = { detail: null, notFound: false, error: null };

  constructor(
    private readonly client: GatewayClient,
    private readonly onChange: (state: IncidentViewState) => void = () => {},
  ) {}

  async load(incidentId: string): Promise<void> {
    try {
      this.state = { detail: await this.client.incident(incidentId), notFound: false, error: null };
    } catch (error) {
      if (error instanceof GatewayError && error.status === 404) {
        this.state = { detail: null, notFound: true, error: null };
      } else {
        this.state = { detail: null, notFound: false, error: String(error) };
      }
    }
    this.onChange(this.state);
  }
}

function renderNode(node: TimelineNode): string {
  const { incident, label } = node;
  return `
    <li class="timeline-node node-${escapeHtml(label)}">
      <span class="node-label">${escapeHtml(label)}</span>
      <strong>${escapeHtml(incident.id)}</strong>
      <span class="defect">${escapeHtml(incident.defect_class)}</span>
      <span class="scope">${incident.impacted_scope.count} ${escapeHtml(incident.impacted_scope.unit)}</span>
      <span class="boundary">${escapeHtml(incident.boundary_point)}</span>
    </li>`;
}

export function renderIncidentTimeline(state: IncidentViewState): string {
  if (state.notFound) {
    return '<p class="muted">Incident not found.</p>';
  }
  if (state.error) {
    return `<div class="banner">${escapeHtml(state.error)}</div>`;
  }
  if (!state.detail) {
    return '<p class="muted">loading incident…</p>';
  }
  const detail = state.detail;
  const nodes = buildTimeline(detail).map(renderNode).join('');
  const evidence = detail.chain
    .flatMap((incident) => ('evidence' in incident ? (incident as { evidence?: number[] }).evidence ?? [] : []))
    .map((seq) => `<a href="#audit" data-seq="${seq}">audit #${seq}</a>`)
    .join(' ');
  return `
    <section class="incident-detail" data-incident="${escapeHtml(detail.id)}">
      <header>
        <strong>${escapeHtml(detail.id)}</strong>
        <span class="status status-${escapeHtml(detail.status)}">${escapeHtml(detail.status)}</span>
      </header>
      <ol class="timeline">${nodes}</ol>
      <dl class="metrics">
        <dt>detection latency</dt><dd>${detail.metrics.detection_latency} ticks</dd>
        <dt>user exposure</dt><dd>${detail.metrics.user_exposure}</dd>
        <dt>commits prevented</dt><dd>${escapeHtml(detail.metrics.irreversible_commits_prevented)}</dd>
      </dl>
      ${evidence ? `<div class="evidence-links">${evidence}</div>` : ''}
    </section>`;
}

export function renderIncidentList(incidents: Incident[]): string {
  if (incidents.length === 0) {
    return '<p class="muted">No incidents recorded.</p>';
  }
  return `<ul class="incident-list">${incidents
    .map(
      (i) =>
        `<li><a href="#incident/${escapeHtml(i.id)}" data-incident="${escapeHtml(i.id)}">
           ${escapeHtml(i.id)}</a> <span class="status-${escapeHtml(i.status)}">${escapeHtml(i.status)}</span>
           ${escapeHtml(i.defect_class)} @ ${escapeHtml(i.boundary_point)}</li>`,
    )
    .join('')}</ul>`;
}
