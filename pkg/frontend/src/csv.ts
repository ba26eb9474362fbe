/**
 * Readers for the solver's CSV output contract.
 *
 * Every reader keeps the raw file text alongside the parsed numbers: the
 * renderer embeds the raw bytes into the SVG so the dump-back command can
 * reproduce its inputs exactly.
 */

import { readFileSync } from "node:fs";
import { basename, join } from "node:path";

export interface SnapshotSeries {
  name: string;       // file basename, e.g. snap_000500.csv
  raw: string;        // exact file content
  x: number[];
  u: number[];
}

export interface IndexEntry {
  step: number;
  time: number;
  timeRaw: string;    // the time column exactly as written
}

export interface DiagnosticsTable {
  name: string;
  raw: string;
  columns: string[];
  step: number[];
  time: number[];
  mass: number[];
  energy: number[];
}

function loadText(path: string): string {
  try {
    return readFileSync(path, "utf8");
  } catch {
    throw new Error(`cannot read ${path}`);
  }
}

function splitRows(raw: string, path: string): string[] {
  const rows = raw.split("\n").filter((line) => line.length > 0);
  if (rows.length < 2) {
    throw new Error(`${path}: no data rows`);
  }
  return rows;
}

function toNumber(field: string, path: string): number {
  const v = Number(field);
  if (!Number.isFinite(v)) {
    throw new Error(`${path}: bad numeric field ${JSON.stringify(field)}`);
  }
  return v;
}

export function readSnapshotCsv(path: string): SnapshotSeries {
  const raw = loadText(path);
  const rows = splitRows(raw, path);
  if (rows[0] !== "x,u") {
    throw new Error(`${path}: expected header x,u`);
  }
  const x: number[] = [];
  const u: number[] = [];
  for (const row of rows.slice(1)) {
    const fields = row.split(",");
    if (fields.length !== 2) {
      throw new Error(`${path}: expected two columns, got ${fields.length}`);
    }
    x.push(toNumber(fields[0], path));
    u.push(toNumber(fields[1], path));
  }
  return { name: basename(path), raw, x, u };
}

export function readIndexCsv(dir: string): IndexEntry[] {
  const path = join(dir, "index.csv");
  const rows = splitRows(loadText(path), path);
  if (rows[0] !== "step,time") {
    throw new Error(`${path}: expected header step,time`);
  }
  return rows.slice(1).map((row) => {
    const fields = row.split(",");
    if (fields.length !== 2) {
      throw new Error(`${path}: expected two columns, got ${fields.length}`);
    }
    return {
      step: toNumber(fields[0], path),
      time: toNumber(fields[1], path),
      timeRaw: fields[1],
    };
  });
}

export function readDiagnosticsCsv(path: string): DiagnosticsTable {
  const raw = loadText(path);
  const rows = splitRows(raw, path);
  const columns = rows[0].split(",");
  const need = ["step", "time", "mass", "energy"];
  for (const col of need) {
    if (!columns.includes(col)) {
      throw new Error(`${path}: missing column ${col}`);
    }
  }
  const at = (name: string) => columns.indexOf(name);
  const table: DiagnosticsTable = {
    name: basename(path), raw, columns,
    step: [], time: [], mass: [], energy: [],
  };
  for (const row of rows.slice(1)) {
    const fields = row.split(",");
    if (fields.length !== columns.length) {
      throw new Error(`${path}: ragged row ${JSON.stringify(row)}`);
    }
    table.step.push(toNumber(fields[at("step")], path));
    table.time.push(toNumber(fields[at("time")], path));
    table.mass.push(toNumber(fields[at("mass")], path));
    table.energy.push(toNumber(fields[at("energy")], path));
  }
  return table;
}

export function snapshotPath(dir: string, step: number): string {
  return join(dir, `snap_${String(step).padStart(6, "0")}.csv`);
}
