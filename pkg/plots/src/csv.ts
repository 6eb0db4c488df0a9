import { readFileSync } from "fs";

/** Raised when an input file lacks a column a figure needs; the message names it. */
export class MissingColumnError extends Error {
  readonly column: string;

  constructor(column: string, file: string) {
    super(`missing column "${column}" in ${file}`);
    this.name = "MissingColumnError";
    this.column = column;
  }
}

export interface Table {
  file: string;
  header: string[];
  rows: string[][];
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n").filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new Error(`empty CSV file ${path}`);
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  return { file: path, header, rows };
}

export function requireColumns(table: Table, columns: string[]): void {
  for (const name of columns) {
    if (!table.header.includes(name)) {
      throw new MissingColumnError(name, table.file);
    }
  }
}

export function column(table: Table, name: string): number[] {
  const index = table.header.indexOf(name);
  if (index < 0) {
    throw new MissingColumnError(name, table.file);
  }
  return table.rows.map((row) => Number(row[index]));
}

/** Per-group mean and population standard deviation, groups sorted ascending. */
export function groupStats(
  keys: number[],
  values: number[]
): { x: number[]; mean: number[]; std: number[] } {
  const buckets = new Map<number, number[]>();
  keys.forEach((key, i) => {
    const bucket = buckets.get(key) ?? [];
    bucket.push(values[i]);
    buckets.set(key, bucket);
  });
  const x = [...buckets.keys()].sort((a, b) => a - b);
  const mean = x.map((key) => {
    const vals = buckets.get(key)!;
    return vals.reduce((a, b) => a + b, 0) / vals.length;
  });
  const std = x.map((key, i) => {
    const vals = buckets.get(key)!;
    const variance = vals.reduce((a, b) => a + (b - mean[i]) ** 2, 0) / vals.length;
    return Math.sqrt(variance);
  });
  return { x, mean, std };
}
