export {
  ManagerApiError,
  ManagerClient,
  type ComponentSummary,
  type Credentials,
  type FetchLike,
  type NodeSummary,
  type OperationResult,
} from "./api.js";
export {
  DEFAULT_POLL_INTERVAL_MS,
  TopologyPoller,
  type TopologyListener,
  type TopologyView,
} from "./poller.js";
export {
  OperationInFlightError,
  OperationInvoker,
  UnknownComponentError,
  type OperationListener,
} from "./operations.js";
export { LogPane, type LogListener } from "./logs.js";
