/**
 * Operation invocation with client-side one-in-flight enforcement,
 * mirroring the manager's per-component conflict rule so the UI can
 * disable buttons instead of collecting 409s.
 */

import { ManagerClient, OperationResult } from "./api.js";
import { TopologyView } from "./poller.js";

export type OperationListener = (
  container: string,
  component: string,
  inFlight: boolean,
) => void;

export class UnknownComponentError extends Error {}
export class OperationInFlightError extends Error {}

export class OperationInvoker {
  private inFlightSet = new Set<string>();
  private listeners: OperationListener[] = [];

  constructor(
    private readonly client: ManagerClient,
    private readonly topology: () => TopologyView,
  ) {}

  subscribe(listener: OperationListener): void {
    this.listeners.push(listener);
  }

  isInFlight(container: string, component: string): boolean {
    return this.inFlightSet.has(`${container}/${component}`);
  }

  /** Operations offered for a component; nothing is invented client-side. */
  available(container: string, component: string): string[] {
    for (const node of this.topology().nodes) {
      if (node.name !== container) continue;
      for (const entry of node.components) {
        if (entry.name === component) return entry.operations;
      }
    }
    return [];
  }

  async invoke(
    container: string,
    component: string,
    operation: string,
  ): Promise<OperationResult> {
    const offered = this.available(container, component);
    if (!offered.includes(operation)) {
      throw new UnknownComponentError(
        `${container}/${component} offers no operation '${operation}'`,
      );
    }
    const key = `${container}/${component}`;
    if (this.inFlightSet.has(key)) {
      throw new OperationInFlightError(
        `an operation on ${key} is already in flight`,
      );
    }
    this.inFlightSet.add(key);
    this.notify(container, component, true);
    try {
      return await this.client.executeOperation(container, component, operation);
    } finally {
      this.inFlightSet.delete(key);
      this.notify(container, component, false);
    }
  }

  private notify(container: string, component: string, inFlight: boolean): void {
    for (const listener of this.listeners) listener(container, component, inFlight);
  }
}
