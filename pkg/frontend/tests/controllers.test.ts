import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { GatewayClient, GatewayError } from '../src/api.js';
import { ApprovalQueue } from '../src/approvals.js';
import { AuditBrowser } from '../src/audit.js';
import { Poller } from '../src/poll.js';

type Handler = (url: string, init?: RequestInit) => { status: number; body: unknown };

function fakeFetch(handler: Handler): typeof fetch {
  return (async (input: RequestInfo | URL, init?: RequestInit) => {
    const { status, body } = handler(String(input), init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'content-type': 'application/json' },
    });
  }) as typeof fetch;
}

describe('GatewayClient', () => {
  it('sends the session token header', async () => {
    let seenToken: string | null = null;
    const client = new GatewayClient({
      baseUrl: 'http://gw',
      token: 'sup-token',
      fetchFn: fakeFetch((url, init) => {
        seenToken = new Headers(init?.headers).get('x-session-token');
        return { status: 200, body: { roles: [] } };
      }),
    });
    await client.roles();
    expect(seenToken).toBe('sup-token');
  });

  it('raises GatewayError with status and message', async () => {
    const client = new GatewayClient({
      baseUrl: 'http://gw',
      fetchFn: fakeFetch(() => ({ status: 403, body: { error: 'denied(capability_missing)' } })),
    });
    await expect(client.pendingApprovals()).rejects.toMatchObject({
      status: 403,
      message: 'denied(capability_missing)',
    });
  });

  it('strips trailing slashes from the base url', async () => {
    let seenUrl = '';
    const client = new GatewayClient({
      baseUrl: 'http://gw///',
      fetchFn: fakeFetch((url) => {
        seenUrl = url;
        return { status: 200, body: { valid: true, first_bad_seq: null } };
      }),
    });
    await client.auditVerify();
    expect(seenUrl).toBe('http://gw/v1/audit/verify');
  });
});

describe('ApprovalQueue controller', () => {
  const pendingBody = {
    pending: [
      {
        package_id: 'pkg-0002',
        run_id: 'run-0001',
        from_role: 'w',
        to_role: 'p',
        irreversible: true,
        artifacts: [],
        gate_outcomes: [],
      },
    ],
  };

  it('resolves approve capability from the role listing', async () => {
    const client = new GatewayClient({
      baseUrl: 'http://gw',
      fetchFn: fakeFetch((url) => {
        if (url.endsWith('/v1/roles')) {
          return {
            status: 200,
            body: {
              roles: [
                { id: 'data-steward', kind: 'human_supervisor', capabilities: ['approve_handoff'], zone: 'control' },
                { id: 'envita-worker', kind: 'worker', capabilities: ['write_working'], zone: 'prep-server' },
              ],
            },
          };
        }
        return { status: 200, body: pendingBody };
      }),
    });
    const supervisor = new ApprovalQueue(client, 'data-steward');
    await supervisor.init();
    expect(supervisor.state.canApprove).toBe(true);
    const worker = new ApprovalQueue(client, 'envita-worker');
    await worker.init();
    expect(worker.state.canApprove).toBe(false);
  });

  it('surfaces 403 as an insufficient-privilege banner', async () => {
    const client = new GatewayClient({
      baseUrl: 'http://gw',
      fetchFn: fakeFetch((url, init) => {
        if (init?.method === 'POST') return { status: 403, body: { error: 'denied' } };
        return { status: 200, body: pendingBody };
      }),
    });
    const queue = new ApprovalQueue(client, 'envita-worker');
    const ok = await queue.decide('pkg-0002', 'approve');
    expect(ok).toBe(false);
    expect(queue.state.banner).toContain('Insufficient privilege');
  });

  it('handles 409 by refreshing to current state', async () => {
    let refreshed = 0;
    const client = new GatewayClient({
      baseUrl: 'http://gw',
      fetchFn: fakeFetch((url, init) => {
        if (init?.method === 'POST') return { status: 409, body: { error: 'illegal transition' } };
        refreshed += 1;
        return { status: 200, body: { pending: [] } };
      }),
    });
    const queue = new ApprovalQueue(client, 'data-steward');
    const ok = await queue.decide('pkg-0002', 'approve');
    expect(ok).toBe(false);
    expect(queue.state.banner).toContain('refreshed');
    expect(refreshed).toBe(1);
    expect(queue.state.cards).toEqual([]);
  });

  it('clears the banner after a successful decision', async () => {
    const client = new GatewayClient({
      baseUrl: 'http://gw',
      fetchFn: fakeFetch((url, init) => {
        if (init?.method === 'POST') return { status: 200, body: { id: 'pkg-0002', phase: 'approved' } };
        return { status: 200, body: { pending: [] } };
      }),
    });
    const queue = new ApprovalQueue(client, 'data-steward');
    queue.state.banner = 'old banner';
    const ok = await queue.decide('pkg-0002', 'approve');
    expect(ok).toBe(true);
    expect(queue.state.banner).toBeNull();
  });
});

describe('AuditBrowser controller', () => {
  function pagedClient(total: number): GatewayClient {
    return new GatewayClient({
      baseUrl: 'http://gw',
      fetchFn: fakeFetch((url) => {
        const parsed = new URL(url);
        const fromSeq = Number(parsed.searchParams.get('from_seq'));
        const limit = Number(parsed.searchParams.get('limit'));
        const records = [];
        for (let seq = fromSeq; seq < Math.min(fromSeq + limit, total + 1); seq += 1) {
          records.push({ seq, at: seq, actor: 'a', event: 'workflow_event', payload: {}, payload_digest: '', prev_hash: '', hash: '', wall_clock: '' });
        }
        return { status: 200, body: { records, total } };
      }),
    });
  }

  it('pages forward and backward within bounds', async () => {
    const browser = new AuditBrowser(pagedClient(60), () => {}, 25);
    await browser.refresh();
    expect(browser.state.records[0]?.seq).toBe(1);
    await browser.nextPage();
    expect(browser.state.fromSeq).toBe(26);
    await browser.nextPage();
    expect(browser.state.fromSeq).toBe(51);
    await browser.nextPage(); // 76 > 60: stays put
    expect(browser.state.fromSeq).toBe(51);
    await browser.prevPage();
    await browser.prevPage();
    expect(browser.state.fromSeq).toBe(1);
  });

  it('records fetch errors for the retry affordance', async () => {
    const client = new GatewayClient({
      baseUrl: 'http://gw',
      fetchFn: (async () => {
        throw new Error('connection refused');
      }) as typeof fetch,
    });
    const browser = new AuditBrowser(client);
    await browser.refresh();
    expect(browser.state.error).toContain('connection refused');
  });
});

describe('Poller', () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it('ticks immediately and then on the interval', async () => {
    let ticks = 0;
    const poller = new Poller(async () => {
      ticks += 1;
    }, 2000);
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(ticks).toBe(1);
    await vi.advanceTimersByTimeAsync(6000);
    expect(ticks).toBe(4);
    poller.stop();
    await vi.advanceTimersByTimeAsync(4000);
    expect(ticks).toBe(4);
    expect(poller.running).toBe(false);
  });

  it('skips overlapping ticks instead of queueing them', async () => {
    let started = 0;
    const poller = new Poller(async () => {
      started += 1;
      await new Promise((resolve) => setTimeout(resolve, 5000));
    }, 1000);
    poller.start();
    await vi.advanceTimersByTimeAsync(3500);
    expect(started).toBe(1);
    poller.stop();
  });

  it('keeps polling through tick failures', async () => {
    let ticks = 0;
    const poller = new Poller(async () => {
      ticks += 1;
      throw new Error('boom');
    }, 1000);
    poller.start();
    await vi.advanceTimersByTimeAsync(2500);
    expect(ticks).toBe(3);
    poller.stop();
  });
});
