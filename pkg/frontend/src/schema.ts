/** Parsing and validation of the experiment CSVs (schema version 1). */

import Papa from "papaparse";

export const SCHEMA_VERSION = "1";

export type FigureKind = "boxplot" | "density_sweep" | "size_sweep" | "timing_table";

export const FIGURE_KINDS: FigureKind[] = [
  "boxplot",
  "density_sweep",
  "size_sweep",
  "timing_table",
];

/** Columns each figure kind requires in its input CSV. */
export const REQUIRED_COLUMNS: Record<FigureKind, string[]> = {
  boxplot: ["schema_version", "method", "sample", "sum_rate"],
  density_sweep: ["schema_version", "sweep_param", "value", "method", "mean_sum_rate"],
  size_sweep: ["schema_version", "sweep_param", "value", "method", "mean_sum_rate"],
  timing_table: ["schema_version", "method", "median_ms_per_sample", "mean_ms_per_sample", "ratio_vs_wmmse"],
};

export class SchemaError extends Error {}

export type Row = Record<string, string>;

/** Parse CSV text and check it against the columns `kind` needs.
 *  Throws SchemaError naming any missing column; empty data is an error. */
export function parseCsv(text: string, kind: FigureKind, source = "<input>"): Row[] {
  const parsed = Papa.parse<Row>(text.trim(), { header: true, skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`${source}: malformed CSV: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  const missing = REQUIRED_COLUMNS[kind].filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(`${source}: missing column(s) ${missing.join(", ")} required for ${kind}`);
  }
  if (parsed.data.length === 0) {
    throw new SchemaError(`${source}: no data rows`);
  }
  for (const row of parsed.data) {
    if (row.schema_version !== SCHEMA_VERSION) {
      throw new SchemaError(
        `${source}: unsupported schema_version ${row.schema_version} (expected ${SCHEMA_VERSION})`,
      );
    }
  }
  return parsed.data;
}

export function toNumber(row: Row, column: string, source = "<input>"): number {
  const value = Number(row[column]);
  if (!Number.isFinite(value)) {
    throw new SchemaError(`${source}: non-numeric value ${JSON.stringify(row[column])} in column ${column}`);
  }
  return value;
}
