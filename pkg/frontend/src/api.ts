/**
 * Thin typed client for the manager's REST API.
 *
 * Only the documented routes are issued; everything else is a bug the
 * test suite catches with a request-recording fake manager.
 */

export interface ComponentSummary {
  container: string;
  name: string;
  operations: string[];
  derived_state: string;
}

export interface NodeSummary {
  name: string;
  standalone: boolean;
  unit_alive: boolean | null;
  components: ComponentSummary[];
}

export interface OperationResult {
  container: string;
  component: string;
  operation: string;
  outcome: string;
  final_program_state: string;
  duration: number;
  exit_status: number | null;
}

export interface Credentials {
  user: string;
  password: string;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ManagerApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`manager returned ${status}: ${detail}`);
  }
}

const API_PREFIX = "/api/v1";

export class ManagerClient {
  private readonly headers: Record<string, string>;

  constructor(
    private readonly baseUrl: string,
    credentials: Credentials | null = null,
    private readonly fetchImpl: FetchLike = fetch,
  ) {
    this.headers = {};
    if (credentials !== null) {
      // credentials live in memory only, never persisted
      const token = btoa(`${credentials.user}:${credentials.password}`);
      this.headers["Authorization"] = `Basic ${token}`;
    }
  }

  private async request(method: string, path: string): Promise<Response> {
    const response = await this.fetchImpl(this.baseUrl + API_PREFIX + path, {
      method,
      headers: this.headers,
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ManagerApiError(response.status, detail);
    }
    return response;
  }

  async getTopology(): Promise<NodeSummary[]> {
    const response = await this.request("GET", "/node");
    return (await response.json()) as NodeSummary[];
  }

  async getNode(container: string): Promise<NodeSummary> {
    const response = await this.request("GET", `/node/${container}`);
    return (await response.json()) as NodeSummary;
  }

  async getComponent(container: string, component: string): Promise<ComponentSummary> {
    const response = await this.request("GET", `/node/${container}/${component}`);
    return (await response.json()) as ComponentSummary;
  }

  async executeOperation(
    container: string,
    component: string,
    operation: string,
  ): Promise<OperationResult> {
    const response = await this.request(
      "POST",
      `/node/${container}/${component}/${operation}`,
    );
    return (await response.json()) as OperationResult;
  }

  async getLogChunk(
    container: string,
    component: string,
    offset: number,
    operation: string | null = null,
    length = 65536,
  ): Promise<string> {
    const params = new URLSearchParams({
      offset: String(offset),
      length: String(length),
    });
    if (operation !== null) params.set("operation", operation);
    const response = await this.request(
      "GET",
      `/node/${container}/${component}/log?${params.toString()}`,
    );
    return await response.text();
  }
}
