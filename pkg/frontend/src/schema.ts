/**
 * Parsing and validation of the swarmtrack metrics table (CSV, schema v1).
 *
 * Every row carries every column; numeric fields use "nan" where a quantity
 * does not apply to that row kind. Rows with missing fields are rejected.
 */

export const SCHEMA_VERSION = 1;

export const COLUMNS = [
  "schema_version",
  "kind",
  "method",
  "n_r",
  "n_d",
  "trial",
  "subproblem",
  "entropy",
  "objective",
  "normalized_objective",
  "redundancy_per_robot",
  "objective_per_robot",
  "messages_per_epoch",
  "sequential_steps",
  "parallel_wall_time",
  "total_wall_time",
] as const;

export type RowKind = "trial" | "replay" | "redundancy";

export interface MetricsRow {
  kind: RowKind;
  method: string;
  nR: number;
  nD: number;
  trial: number;
  subproblem: string;
  entropy: number;
  objective: number;
  normalizedObjective: number;
  redundancyPerRobot: number;
  objectivePerRobot: number;
  messagesPerEpoch: number;
  sequentialSteps: number;
  parallelWallTime: number;
  totalWallTime: number;
}

export class SchemaError extends Error {}

function parseNumber(raw: string, column: string, line: number): number {
  if (raw === "nan") return NaN;
  const value = Number(raw);
  if (raw === "" || Number.isNaN(value)) {
    throw new SchemaError(`line ${line}: bad numeric ${column}=${raw}`);
  }
  return value;
}

/** Parse the metrics CSV; header and schema version are checked, and any
 * row missing a field is rejected. */
export function parseMetricsCsv(text: string): MetricsRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new SchemaError("empty metrics table");
  const header = lines[0].split(",");
  if (header.length !== COLUMNS.length || header.some((h, i) => h !== COLUMNS[i])) {
    throw new SchemaError(`unexpected header: ${lines[0]}`);
  }
  const rows: MetricsRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== COLUMNS.length) {
      throw new SchemaError(`line ${i + 1}: expected ${COLUMNS.length} fields`);
    }
    const record: Record<string, string> = {};
    COLUMNS.forEach((c, k) => (record[c] = parts[k]));
    if (Number(record.schema_version) !== SCHEMA_VERSION) {
      throw new SchemaError(`line ${i + 1}: schema ${record.schema_version}`);
    }
    const kind = record.kind as RowKind;
    if (!["trial", "replay", "redundancy"].includes(kind)) {
      throw new SchemaError(`line ${i + 1}: unknown kind ${record.kind}`);
    }
    if (record.method === "") {
      throw new SchemaError(`line ${i + 1}: missing method`);
    }
    rows.push({
      kind,
      method: record.method,
      nR: parseNumber(record.n_r, "n_r", i + 1),
      nD: parseNumber(record.n_d, "n_d", i + 1),
      trial: parseNumber(record.trial, "trial", i + 1),
      subproblem: record.subproblem,
      entropy: parseNumber(record.entropy, "entropy", i + 1),
      objective: parseNumber(record.objective, "objective", i + 1),
      normalizedObjective: parseNumber(
        record.normalized_objective,
        "normalized_objective",
        i + 1
      ),
      redundancyPerRobot: parseNumber(
        record.redundancy_per_robot,
        "redundancy_per_robot",
        i + 1
      ),
      objectivePerRobot: parseNumber(
        record.objective_per_robot,
        "objective_per_robot",
        i + 1
      ),
      messagesPerEpoch: parseNumber(
        record.messages_per_epoch,
        "messages_per_epoch",
        i + 1
      ),
      sequentialSteps: parseNumber(
        record.sequential_steps,
        "sequential_steps",
        i + 1
      ),
      parallelWallTime: parseNumber(
        record.parallel_wall_time,
        "parallel_wall_time",
        i + 1
      ),
      totalWallTime: parseNumber(record.total_wall_time, "total_wall_time", i + 1),
    });
  }
  return rows;
}
