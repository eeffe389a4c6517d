/** Approval queue: pending packages with gate evidence, approve/block actions.
 *
 * Evidence renders above the action buttons, and the buttons render only for
 * sessions whose role holds approve_handoff. Decisions confirm only after the
 * server acknowledges (no optimistic UI), preserving exactly-one-approval.
 */

import { GatewayClient, GatewayError } from './api.js';
import type { ApprovalCard, GateOutcome } from './types.js';
import { escapeHtml } from './render.js';

export interface ApprovalQueueState {
  cards: ApprovalCard[];
  canApprove: boolean;
  banner: string | null;
  loaded: boolean;
}

export class ApprovalQueue {
  state: ApprovalQueueState = { cards: [], canApprove: false, banner: null, loaded: false };

  constructor(
    private readonly client: GatewayClient,
    private readonly roleId: string,
    private readonly onChange: (state: ApprovalQueueState) => void = () => {},
  ) {}

  /** Resolve whether this session's role may approve; default deny. */
  async init(): Promise<void> {
    try {
      const roles = await this.client.roles();
      const mine = roles.find((r) => r.id === this.roleId);
      this.state.canApprove = mine !== undefined && mine.capabilities.includes('approve_handoff');
    } catch {
      this.state.canApprove = false;
    }
    this.onChange(this.state);
  }

  async refresh(): Promise<void> {
    this.state.cards = await this.client.pendingApprovals();
    this.state.loaded = true;
    this.onChange(this.state);
  }

  async decide(packageId: string, decision: 'approve' | 'block'): Promise<boolean> {
    try {
      await this.client.decide(packageId, decision);
      this.state.banner = null;
      await this.refresh();
      return true;
    } catch (error) {
      if (error instanceof GatewayError && error.status === 403) {
        this.state.banner = 'Insufficient privilege: this session cannot record approval decisions.';
      } else if (error instanceof GatewayError && error.status === 409) {
        // Package moved on while the card was displayed; refresh to the
        // current state rather than pretending the decision landed.
        this.state.banner = 'Package state changed; queue refreshed.';
        await this.refresh();
      } else {
        this.state.banner = `Decision failed: ${error instanceof Error ? error.message : String(error)}`;
      }
      this.onChange(this.state);
      return false;
    }
  }
}

function renderOutcome(outcome: GateOutcome): string {
  const verdictClass = outcome.verdict === 'pass' ? 'verdict-pass' : 'verdict-fail';
  const offending = outcome.offending_items
    .slice(0, 10)
    .map(
      ([record, field, value]) =>
        `<li><code>${escapeHtml(String(record))}</code> ${escapeHtml(String(field))} = ${escapeHtml(
          JSON.stringify(value),
        )}</li>`,
    )
    .join('');
  const more =
    outcome.offending_items.length > 10
      ? `<li>… ${outcome.offending_items.length - 10} more offending values</li>`
      : '';
  return `
    <div class="gate-outcome ${verdictClass}">
      <span class="validator">${escapeHtml(outcome.validator_id)}</span>
      <span class="verdict">${outcome.verdict}</span>
      ${offending || more ? `<ul class="offending">${offending}${more}</ul>` : ''}
    </div>`;
}

export function renderApprovalCard(card: ApprovalCard, canApprove: boolean): string {
  const evidence = card.gate_outcomes.map(renderOutcome).join('');
  const actions = canApprove
    ? `<div class="actions">
         <button data-action="approve" data-package="${escapeHtml(card.package_id)}">Approve</button>
         <button data-action="block" data-package="${escapeHtml(card.package_id)}">Block</button>
       </div>`
    : '<div class="actions muted">read-only session</div>';
  return `
    <article class="approval-card" data-package="${escapeHtml(card.package_id)}">
      <header>
        <strong>${escapeHtml(card.package_id)}</strong>
        <span>${escapeHtml(card.from_role)} &rarr; ${escapeHtml(card.to_role)}</span>
        ${card.irreversible ? '<span class="flag-irreversible">irreversible</span>' : ''}
      </header>
      <div class="artifacts">${card.artifacts
        .map((a) => `<code title="${escapeHtml(a.digest)}">${escapeHtml(a.name)}</code>`)
        .join(' ')}</div>
      <section class="evidence">${evidence}</section>
      ${actions}
    </article>`;
}

export function renderQueue(state: ApprovalQueueState): string {
  const banner = state.banner ? `<div class="banner">${escapeHtml(state.banner)}</div>` : '';
  if (!state.loaded) {
    return `${banner}<p class="muted">loading approval queue…</p>`;
  }
  if (state.cards.length === 0) {
    return `${banner}<p class="muted">No packages awaiting approval.</p>`;
  }
  return banner + state.cards.map((c) => renderApprovalCard(c, state.canApprove)).join('');
}
