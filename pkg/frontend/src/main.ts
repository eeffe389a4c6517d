/** DOM wiring for the operator console. All state lives on the server; this
 * file only routes clicks to controllers and repaints sections. */

import { GatewayClient } from './api.js';
import { ApprovalQueue, renderQueue } from './approvals.js';
import { AuditBrowser, renderAuditPage } from './audit.js';
import { IncidentView, renderIncidentList, renderIncidentTimeline } from './incidents.js';
import { Poller } from './poll.js';
import { SimulationPanel, renderSimulationResult } from './simulate.js';

interface ConsoleConfig {
  baseUrl: string;
  token: string;
  roleId: string;
  pollMs: number;
}

function readConfig(): ConsoleConfig {
  const params = new URLSearchParams(window.location.search);
  return {
    baseUrl: params.get('gateway') ?? window.location.origin,
    token: params.get('token') ?? '',
    roleId: params.get('role') ?? '',
    pollMs: Number(params.get('poll') ?? '2000'),
  };
}

function mount(): void {
  const config = readConfig();
  const client = new GatewayClient({ baseUrl: config.baseUrl, token: config.token });

  const approvalsEl = document.querySelector<HTMLElement>('#approvals')!;
  const incidentsEl = document.querySelector<HTMLElement>('#incidents')!;
  const incidentDetailEl = document.querySelector<HTMLElement>('#incident-detail')!;
  const auditEl = document.querySelector<HTMLElement>('#audit')!;
  const simulateEl = document.querySelector<HTMLElement>('#simulate-result')!;

  const queue = new ApprovalQueue(client, config.roleId, (state) => {
    approvalsEl.innerHTML = renderQueue(state);
  });
  const incidentView = new IncidentView(client, (state) => {
    incidentDetailEl.innerHTML = renderIncidentTimeline(state);
  });
  const audit = new AuditBrowser(client, (state) => {
    auditEl.innerHTML = renderAuditPage(state);
  });
  const simulation = new SimulationPanel(client, (state) => {
    simulateEl.innerHTML = renderSimulationResult(state);
  });

  const refreshIncidents = async (): Promise<void> => {
    incidentsEl.innerHTML = renderIncidentList(await client.incidents());
  };

  void queue.init();
  const approvalsPoller = new Poller(() => queue.refresh(), config.pollMs);
  approvalsPoller.start();
  const incidentsPoller = new Poller(refreshIncidents, config.pollMs * 2);
  incidentsPoller.start();
  void audit.refresh();

  approvalsEl.addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset['action'];
    const packageId = target.dataset['package'];
    if ((action === 'approve' || action === 'block') && packageId) {
      void queue.decide(packageId, action);
    }
  });

  incidentsEl.addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    const incidentId = target.dataset['incident'];
    if (incidentId) {
      event.preventDefault();
      void incidentView.load(incidentId);
    }
  });

  auditEl.addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    switch (target.dataset['action']) {
      case 'prev':
        void audit.prevPage();
        break;
      case 'next':
        void audit.nextPage();
        break;
      case 'verify':
        void audit.verify();
        break;
      case 'retry':
        void audit.refresh();
        break;
    }
  });

  document.querySelector<HTMLFormElement>('#simulate-form')!.addEventListener('submit', (event) => {
    event.preventDefault();
    const form = event.target as HTMLFormElement;
    const data = new FormData(form);
    void simulation.run({
      p: Number(data.get('p')),
      n: Number(data.get('n')),
      q: Number(data.get('q')),
      k: Number(data.get('k')),
      trials: Number(data.get('trials')),
      seed: Number(data.get('seed')),
    });
  });
}

if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', mount);
}
