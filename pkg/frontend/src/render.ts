/**
 * Figure assembly: single snapshot panels, the 2x2 grid, and the
 * energy/mass diagnostics curve.
 *
 * Each rendered series is also embedded verbatim in a <metadata> element so
 * extractSeries can hand the exact input bytes back (the dump-back mode used
 * to verify that the drawn data is the CSV data).
 */

import { join } from "node:path";
import {
  DiagnosticsTable,
  IndexEntry,
  SnapshotSeries,
  readDiagnosticsCsv,
  readIndexCsv,
  readSnapshotCsv,
  snapshotPath,
} from "./csv.js";
import {
  Frame,
  document,
  escapeXml,
  fmtTick,
  frameAxes,
  line,
  polyline,
  text,
} from "./svg.js";

export interface PlotJob {
  inDir: string;
  steps: number[];
  xlim?: [number, number];
  ylim?: [number, number];
}

const DENSITY = 'stroke="#2563a8" stroke-width="1.5"';
const MASS = 'stroke="#c2622d" stroke-width="1.5" stroke-dasharray="5,3"';
const LABEL = 'font-family="Helvetica, Arial, sans-serif" fill="#333333"';

function padded(lo: number, hi: number, frac: number): [number, number] {
  if (hi > lo) {
    const pad = frac * (hi - lo);
    return [lo - pad, hi + pad];
  }
  const pad = Math.max(0.5, Math.abs(lo) * 0.1);
  return [lo - pad, hi + pad];
}

function seriesBlock(name: string, raw: string): string {
  return `<metadata class="series" data-name="${name}">${escapeXml(raw)}</metadata>`;
}

interface Selected {
  series: SnapshotSeries;
  entry: IndexEntry;
}

function selectSteps(job: PlotJob): Selected[] {
  if (job.steps.length === 0) {
    throw new Error("no steps selected");
  }
  const index = readIndexCsv(job.inDir);
  const byStep = new Map(index.map((e) => [e.step, e]));
  return job.steps.map((step) => {
    const entry = byStep.get(step);
    if (entry === undefined) {
      throw new Error(
        `step ${step} not in index.csv (have ${index.map((e) => e.step).join(", ")})`);
    }
    return { series: readSnapshotCsv(snapshotPath(job.inDir, step)), entry };
  });
}

function limits(selected: Selected[], job: PlotJob): { xlim: [number, number]; ylim: [number, number] } {
  const xs = selected.flatMap((s) => s.series.x);
  const us = selected.flatMap((s) => s.series.u);
  const xlim = job.xlim ?? padded(Math.min(...xs), Math.max(...xs), 0.02);
  const ylim = job.ylim ?? padded(Math.min(...us), Math.max(...us), 0.05);
  return { xlim, ylim };
}

function drawPanel(frame: Frame, s: Selected, caption: string): string[] {
  const { parts, sx, sy } = frameAxes(frame);
  parts.push(polyline(
    s.series.x.map((x, i) => [sx(x), sy(s.series.u[i])] as [number, number]),
    DENSITY));
  parts.push(text(frame.left, frame.top - 8, caption, `${LABEL} font-size="12"`));
  parts.push(text(frame.left + frame.width / 2, frame.top + frame.height + 30,
                  "x", `${LABEL} font-size="11" text-anchor="middle"`));
  parts.push(text(frame.left - 36, frame.top + frame.height / 2, "u",
                  `${LABEL} font-size="11" text-anchor="middle"`));
  return parts;
}

/** Line plot of one snapshot, titled with its time. */
export function renderSnapshot(job: PlotJob): string {
  if (job.steps.length !== 1) {
    throw new Error("snapshot plot takes exactly one step");
  }
  const selected = selectSteps(job);
  const { xlim, ylim } = limits(selected, job);
  const frame: Frame = { left: 52, top: 34, width: 392, height: 266, xlim, ylim };
  const body = drawPanel(frame, selected[0], `t = ${fmtTick(selected[0].entry.time)}`);
  body.push(seriesBlock(selected[0].series.name, selected[0].series.raw));
  return document(460, 340, body);
}

/** 2x2 grid of four snapshots on shared axes. */
export function renderPanelGrid(job: PlotJob): string {
  if (job.steps.length === 0) {
    throw new Error("no steps selected");
  }
  if (job.steps.length !== 4) {
    throw new Error(`panel grid needs exactly four steps, got ${job.steps.length}`);
  }
  const selected = selectSteps(job);
  const { xlim, ylim } = limits(selected, job);
  const body: string[] = [];
  const tags = ["(a)", "(b)", "(c)", "(d)"];
  selected.forEach((s, i) => {
    const col = i % 2;
    const row = (i - col) / 2;
    const frame: Frame = {
      left: 400 * col + 52, top: 280 * row + 30,
      width: 332, height: 204, xlim, ylim,
    };
    body.push(...drawPanel(frame, s, `${tags[i]} t = ${fmtTick(s.entry.time)}`));
  });
  for (const s of selected) {
    body.push(seriesBlock(s.series.name, s.series.raw));
  }
  return document(800, 560, body);
}

/** Energy (left axis) and mass (right axis) against time. */
export function renderEnergyCurve(inDir: string): string {
  const table: DiagnosticsTable = readDiagnosticsCsv(join(inDir, "diagnostics.csv"));
  const xlim = padded(Math.min(...table.time), Math.max(...table.time), 0.02);
  const elim = padded(Math.min(...table.energy), Math.max(...table.energy), 0.05);
  // mass is conserved to round-off; a floor keeps the axis from zooming into noise
  const mmin = Math.min(...table.mass);
  const mmax = Math.max(...table.mass);
  const floor = Math.max(1e-6, 0.2 * Math.abs(0.5 * (mmin + mmax)));
  const mlim: [number, number] = mmax - mmin < floor
    ? [0.5 * (mmin + mmax) - floor, 0.5 * (mmin + mmax) + floor]
    : padded(mmin, mmax, 0.05);
  const frame: Frame = { left: 64, top: 34, width: 666, height: 338, xlim, ylim: elim };
  const { parts, sx, sy } = frameAxes(frame);
  const body = parts;
  body.push(polyline(
    table.time.map((t, i) => [sx(t), sy(table.energy[i])] as [number, number]),
    DENSITY));
  const sm = (v: number) =>
    frame.top + frame.height - ((v - mlim[0]) / (mlim[1] - mlim[0])) * frame.height;
  body.push(polyline(
    table.time.map((t, i) => [sx(t), sm(table.mass[i])] as [number, number]),
    MASS));
  const right = frame.left + frame.width;
  for (const v of [mlim[0] + 0.25 * (mlim[1] - mlim[0]),
                   mlim[0] + 0.5 * (mlim[1] - mlim[0]),
                   mlim[0] + 0.75 * (mlim[1] - mlim[0])]) {
    body.push(line(right, sm(v), right + 4, sm(v), 'stroke="#333333" stroke-width="1"'));
    body.push(text(right + 6, sm(v) + 3, fmtTick(v), `${LABEL} font-size="10"`));
  }
  body.push(text(frame.left, frame.top - 10, "energy", `${LABEL} font-size="12"`));
  body.push(text(right, frame.top - 10, "mass", `${LABEL} font-size="12" text-anchor="end"`));
  body.push(text(frame.left + frame.width / 2, frame.top + frame.height + 32,
                 "t", `${LABEL} font-size="11" text-anchor="middle"`));
  body.push(seriesBlock(table.name, table.raw));
  return document(800, 420, body);
}

function unescapeXml(s: string): string {
  return s.replace(/&lt;/g, "<").replace(/&gt;/g, ">").replace(/&amp;/g, "&");
}

/** Recover the embedded input series from a rendered figure. */
export function extractSeries(svgText: string): Array<{ name: string; content: string }> {
  const out: Array<{ name: string; content: string }> = [];
  const pattern = /<metadata class="series" data-name="([^"]+)">([\s\S]*?)<\/metadata>/g;
  for (const match of svgText.matchAll(pattern)) {
    out.push({ name: match[1], content: unescapeXml(match[2]) });
  }
  if (out.length === 0) {
    throw new Error("no embedded series found");
  }
  return out;
}
