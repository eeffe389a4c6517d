/** Simulation panel: drive the reliability simulator and show the bands. */

import { GatewayClient } from './api.js';
import type { SimulationParams, SimulationResult } from './types.js';
import { escapeHtml } from './render.js';

export interface SimulationPanelState {
  result: SimulationResult | null;
  busy: boolean;
  error: string | null;
}

export class SimulationPanel {
  state: SimulationPanelState = { result: null, busy: false, error: null };

  constructor(
    private readonly client: GatewayClient,
    private readonly onChange: (state: SimulationPanelState) => void = () => {},
  ) {}

  async run(params: SimulationParams): Promise<void> {
    this.state.busy = true;
    this.onChange(this.state);
    try {
      this.state.result = await this.client.simulate(params);
      this.state.error = null;
    } catch (error) {
      this.state.error = String(error);
    } finally {
      this.state.busy = false;
    }
    this.onChange(this.state);
  }
}

export function renderSimulationResult(state: SimulationPanelState): string {
  if (state.busy) {
    return '<p class="muted">running trials…</p>';
  }
  if (state.error) {
    return `<div class="banner">${escapeHtml(state.error)}</div>`;
  }
  if (!state.result) {
    return '<p class="muted">Set parameters and run the simulator.</p>';
  }
  const r = state.result;
  const escape =
    r.empirical_escape_rate === null
      ? 'no error-bearing trials'
      : `empirical ${r.empirical_escape_rate.toFixed(6)} vs analytic ${r.analytic_escape_rate.toFixed(6)} ` +
        `(${r.escape_within_3sigma ? 'within' : 'OUTSIDE'} 3&sigma;)`;
  return `
    <dl class="sim-result">
      <dt>end-to-end success</dt>
      <dd>empirical ${r.empirical_end_to_end_success.toFixed(6)} vs analytic ${r.analytic_end_to_end_success.toFixed(6)}
          (${r.success_within_3sigma ? 'within' : 'OUTSIDE'} 3&sigma;)</dd>
      <dt>escape rate</dt>
      <dd>${escape} over ${r.error_bearing_trials} error-bearing trials</dd>
      <dt>trials / seed</dt>
      <dd>${r.trials} / ${r.seed}</dd>
    </dl>`;
}
