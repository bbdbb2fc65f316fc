import { readFileSync } from "node:fs";

export type Row = Record<string, string>;

/** Minimal CSV reader for the harness outputs: header row, no quoting. */
export function readCsv(path: string): Row[] {
  const text = readFileSync(path, "utf8").trim();
  if (!text) {
    throw new Error(`${path}: empty CSV`);
  }
  const [headerLine, ...lines] = text.split(/\r?\n/);
  const header = headerLine.split(",");
  return lines.map((line) => {
    const cells = line.split(",");
    const row: Row = {};
    header.forEach((name, i) => {
      row[name] = cells[i] ?? "";
    });
    return row;
  });
}

/** Load rows and fail loudly unless every required column is present. */
export function readSchema(path: string, required: string[]): Row[] {
  const rows = readCsv(path);
  const have = new Set(Object.keys(rows[0] ?? {}));
  const missing = required.filter((c) => !have.has(c));
  if (rows.length === 0 || missing.length > 0) {
    throw new Error(
      `${path}: expected columns [${required.join(", ")}], missing [${missing.join(", ")}]`,
    );
  }
  return rows;
}

export function num(row: Row, col: string): number {
  const v = Number(row[col]);
  if (!Number.isFinite(v)) {
    throw new Error(`non-numeric value '${row[col]}' in column ${col}`);
  }
  return v;
}
