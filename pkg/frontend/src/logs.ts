/**
 * Streaming log pane: repeated chunk fetches with an advancing offset.
 * The displayed text is exactly the concatenation of fetched chunks.
 */

import { ManagerClient } from "./api.js";

export type LogListener = (text: string) => void;

export class LogPane {
  private text = "";
  private offset = 0;
  private listeners: LogListener[] = [];

  constructor(
    private readonly client: ManagerClient,
    private readonly container: string,
    private readonly component: string,
    private readonly operation: string | null = null,
    private readonly chunkLength = 65536,
  ) {}

  subscribe(listener: LogListener): void {
    this.listeners.push(listener);
  }

  content(): string {
    return this.text;
  }

  currentOffset(): number {
    return this.offset;
  }

  /** Fetch the next chunk; returns how many characters arrived. */
  async poll(): Promise<number> {
    const chunk = await this.client.getLogChunk(
      this.container,
      this.component,
      this.offset,
      this.operation,
      this.chunkLength,
    );
    if (chunk.length > 0) {
      this.text += chunk;
      this.offset += chunk.length;
      for (const listener of this.listeners) listener(this.text);
    }
    return chunk.length;
  }
}
