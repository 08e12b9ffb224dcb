/** Strict CSV reading for the solver's stats and trace files. */

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export interface Table {
  header: string[];
  rows: Record<string, string>[];
}

/** Parse simple comma-separated text (no quoting; the solver never quotes). */
export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r?\n/)
    .filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV");
  }
  const header = lines[0].split(",");
  const rows: Record<string, string>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(
        `line ${i + 1}: ${cells.length} cells, header has ${header.length}`,
      );
    }
    const row: Record<string, string> = {};
    header.forEach((name, j) => (row[name] = cells[j]));
    rows.push(row);
  }
  return { header, rows };
}

/** Assert the columns we are about to read actually exist. */
export function requireColumns(table: Table, columns: string[]): void {
  for (const col of columns) {
    if (!table.header.includes(col)) {
      throw new SchemaError(`missing column ${col}`);
    }
  }
}

export function num(row: Record<string, string>, col: string): number {
  const v = Number(row[col]);
  if (!Number.isFinite(v)) {
    throw new SchemaError(`column ${col}: not a number (${row[col]!})`);
  }
  return v;
}
