/**
 * Figure tests against CSVs produced by the actual solver CLI, plus the
 * dump-back loop that proves the embedded data is the input data.
 */
import { execFileSync, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { beforeAll, describe, expect, it } from "vitest";

import { extractSeries, renderEnergyCurve, renderPanelGrid, renderSnapshot } from "../src/render.js";

const CLI = fileURLToPath(new URL("../dist/cli.js", import.meta.url));
let runDir: string;

function polylines(svg: string): Array<Array<[number, number]>> {
  const out: Array<Array<[number, number]>> = [];
  for (const m of svg.matchAll(/<polyline [^>]*points="([^"]+)"/g)) {
    out.push(m[1].split(" ").map((pair) => {
      const [x, y] = pair.split(",").map(Number);
      return [x, y] as [number, number];
    }));
  }
  return out;
}

function tickLabels(svg: string): string[] {
  return [...svg.matchAll(/<text [^>]*>([^<]*)<\/text>/g)].map((m) => m[1]);
}

function plots(args: string[]) {
  return spawnSync(process.execPath, [CLI, ...args], { encoding: "utf8" });
}

beforeAll(() => {
  runDir = mkdtempSync(join(tmpdir(), "plots-run-"));
  execFileSync("python3", [
    "-m", "wgflow", "--preset", "fp-linear", "--scale", "10",
    "--steps", "80", "--snapshot-every", "20", "--out-dir", runDir,
  ], { encoding: "utf8" });
}, 180_000);

describe("snapshot figure", () => {
  it("draws a constant profile as a flat line", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-const-"));
    writeFileSync(join(dir, "index.csv"), "step,time\n0,0\n");
    writeFileSync(join(dir, "snap_000000.csv"), "x,u\n0.125,1\n0.375,1\n0.625,1\n0.875,1\n");
    const svg = renderSnapshot({ inDir: dir, steps: [0] });
    const ys = polylines(svg)[0].map(([, y]) => y);
    expect(new Set(ys).size).toBe(1);
    expect(svg).toContain("t = 0");
  });

  it("draws the relaxed state as a bell centered in the box", () => {
    const svg = renderSnapshot({ inDir: runDir, steps: [80] });
    const pts = polylines(svg)[0];
    const peak = pts.reduce((best, p, i) => (p[1] < pts[best][1] ? i : best), 0);
    expect(peak).toBeGreaterThan(pts.length / 3);
    expect(peak).toBeLessThan((2 * pts.length) / 3);
    expect(svg).toContain("t = 0.08");
  });

  it("requires exactly one step", () => {
    expect(() => renderSnapshot({ inDir: runDir, steps: [0, 20] })).toThrow(/one step/);
  });
});

describe("panel grid", () => {
  it("rejects an empty selection", () => {
    expect(() => renderPanelGrid({ inDir: runDir, steps: [] })).toThrow(/no steps selected/);
  });

  it("rejects steps missing from index.csv", () => {
    expect(() => renderPanelGrid({ inDir: runDir, steps: [0, 20, 40, 41] }))
      .toThrow(/step 41 not in index.csv/);
  });

  it("renders four panels at fixed dimensions", () => {
    const svg = renderPanelGrid({ inDir: runDir, steps: [0, 20, 40, 80] });
    expect(svg).toContain('width="800" height="560"');
    expect(polylines(svg)).toHaveLength(4);
    for (const tag of ["(a)", "(b)", "(c)", "(d)"]) {
      expect(svg).toContain(tag);
    }
  });

  it("respects an axis limit override", () => {
    const base = renderPanelGrid({ inDir: runDir, steps: [0, 20, 40, 80] });
    const wide = renderPanelGrid({ inDir: runDir, steps: [0, 20, 40, 80], ylim: [0, 8] });
    expect(wide).not.toBe(base);
    expect(tickLabels(wide)).toContain("8");
  });
});

describe("energy and mass curve", () => {
  it("shows descending energy and a flat mass line", () => {
    const svg = renderEnergyCurve(runDir);
    const [energy, mass] = polylines(svg);
    expect(energy[energy.length - 1][1]).toBeGreaterThan(energy[0][1]);
    const massYs = mass.map(([, y]) => y);
    expect(Math.max(...massYs) - Math.min(...massYs)).toBeLessThanOrEqual(0.02);
    expect(svg).toContain(">energy<");
    expect(svg).toContain(">mass<");
  });

  it("fails loudly without diagnostics.csv", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-empty-"));
    expect(() => renderEnergyCurve(dir)).toThrow(/cannot read/);
  });
});

describe("command line", () => {
  it("writes identical bytes across reruns", () => {
    const out1 = join(runDir, "grid1.svg");
    const out2 = join(runDir, "grid2.svg");
    for (const out of [out1, out2]) {
      const res = plots(["render", "--in", runDir, "--steps", "0,20,40,80", "--out", out]);
      expect(res.status).toBe(0);
    }
    expect(readFileSync(out1, "utf8")).toBe(readFileSync(out2, "utf8"));
  });

  it("round trips every embedded series bit for bit", () => {
    const grid = join(runDir, "grid.svg");
    const curve = join(runDir, "curve.svg");
    expect(plots(["render", "--in", runDir, "--steps", "0,20,40,80", "--out", grid]).status).toBe(0);
    expect(plots(["energy", "--in", runDir, "--out", curve]).status).toBe(0);
    const dumpDir = join(runDir, "dump");
    expect(plots(["dump", "--in", grid, "--out-dir", dumpDir]).status).toBe(0);
    expect(plots(["dump", "--in", curve, "--out-dir", dumpDir]).status).toBe(0);
    for (const name of ["snap_000000.csv", "snap_000020.csv", "snap_000040.csv",
                        "snap_000080.csv", "diagnostics.csv"]) {
      expect(readFileSync(join(dumpDir, name))).toEqual(readFileSync(join(runDir, name)));
    }
  });

  it("exits 1 with a message when a CSV is missing", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-missing-"));
    const res = plots(["energy", "--in", dir, "--out", join(dir, "x.svg")]);
    expect(res.status).toBe(1);
    expect(res.stderr).toMatch(/error: cannot read/);
  });

  it("exits 2 on usage mistakes", () => {
    expect(plots([]).status).toBe(2);
    expect(plots(["render", "--in", runDir, "--steps", "", "--out", "/tmp/x.svg"]).status).toBe(1);
    expect(plots(["render", "--bogus", "1"]).status).toBe(2);
    expect(plots(["snapshot", "--in", runDir, "--step", "1.5", "--out", "x.svg"]).status).toBe(2);
  });

  it("refuses to dump a figure without embedded series", () => {
    const plain = join(runDir, "plain.svg");
    writeFileSync(plain, "<svg xmlns=\"http://www.w3.org/2000/svg\"></svg>\n");
    const res = plots(["dump", "--in", plain, "--out-dir", join(runDir, "nowhere")]);
    expect(res.status).toBe(1);
    expect(res.stderr).toMatch(/no embedded series/);
  });
});

it("extractSeries inverts the embedding", () => {
  const svg = renderSnapshot({ inDir: runDir, steps: [40] });
  const series = extractSeries(svg);
  expect(series).toHaveLength(1);
  expect(series[0].name).toBe("snap_000040.csv");
  expect(series[0].content).toBe(readFileSync(join(runDir, "snap_000040.csv"), "utf8"));
});
