export { ApiClient, ApiError } from "./api.js";
export type { FleetApi } from "./api.js";
export { Dashboard } from "./app.js";
export { pointInPolygon, LassoController } from "./lasso.js";
export { clusterColor, divergingColor, extent, linearScale, Z_CLAMP } from "./scales.js";
export { ViewState } from "./state.js";
export { MetricReadingView } from "./views/metricReading.js";
export { NodeBehaviorView } from "./views/nodeBehavior.js";
export { SimilarityView } from "./views/similarity.js";
export { TimeDomainView } from "./views/timeDomain.js";
export type * from "./types.js";
