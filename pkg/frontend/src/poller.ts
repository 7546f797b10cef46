/**
 * Topology polling with staleness tracking.
 *
 * The view renders exactly what the manager reported last; when a poll
 * fails the previous data stays visible with a stale badge.
 */

import { ManagerClient, NodeSummary } from "./api.js";

export interface TopologyView {
  nodes: NodeSummary[];
  stale: boolean;
  lastUpdated: number | null;
}

export type TopologyListener = (view: TopologyView) => void;

export const DEFAULT_POLL_INTERVAL_MS = 2000;

export class TopologyPoller {
  private view: TopologyView = { nodes: [], stale: true, lastUpdated: null };
  private listeners: TopologyListener[] = [];
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;

  constructor(
    private readonly client: ManagerClient,
    private readonly intervalMs: number = DEFAULT_POLL_INTERVAL_MS,
  ) {}

  current(): TopologyView {
    return this.view;
  }

  subscribe(listener: TopologyListener): void {
    this.listeners.push(listener);
  }

  start(): void {
    if (this.timer !== null) return;
    void this.pollOnce();
    this.timer = setInterval(() => void this.pollOnce(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async pollOnce(): Promise<void> {
    if (this.inFlight) return; // a slow manager must not pile up requests
    this.inFlight = true;
    try {
      const nodes = await this.client.getTopology();
      this.view = { nodes, stale: false, lastUpdated: Date.now() };
    } catch {
      this.view = { ...this.view, stale: true };
    } finally {
      this.inFlight = false;
    }
    for (const listener of this.listeners) listener(this.view);
  }
}
