export { parseTable, readTable, SCHEMAS } from "./csv.js";
export type { ColumnKind, Row, TableSpec } from "./csv.js";
export { BadValue, SchemaMismatch } from "./errors.js";
export { groupByTime, renderFronts } from "./figures/fronts.js";
export { pickTime, renderOverlay, tailSteps } from "./figures/overlay.js";
export { renderReaction } from "./figures/reaction.js";
export { fitLine, renderVelocity, velocityPoints } from "./figures/velocity.js";
export { run } from "./cli.js";
export { niceTicks, padded, sig } from "./svg.js";
