#!/usr/bin/env node
/**
 * plots: figures from solver CSV output.
 *
 *   plots render   --in DIR --steps a,b,c,d --out FILE [--xlim lo,hi] [--ylim lo,hi]
 *   plots snapshot --in DIR --step K --out FILE [--xlim lo,hi] [--ylim lo,hi]
 *   plots energy   --in DIR --out FILE
 *   plots dump     --in FILE --out-dir DIR
 *
 * Exit status: 0 on success, 2 for usage errors, 1 for runtime failures.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import { PlotJob, extractSeries, renderEnergyCurve, renderPanelGrid, renderSnapshot } from "./render.js";

const USAGE = `usage:
  plots render   --in DIR --steps a,b,c,d --out FILE [--xlim lo,hi] [--ylim lo,hi]
  plots snapshot --in DIR --step K --out FILE [--xlim lo,hi] [--ylim lo,hi]
  plots energy   --in DIR --out FILE
  plots dump     --in FILE --out-dir DIR`;

class UsageError extends Error {}

function parseFlags(args: string[], allowed: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < args.length; i += 2) {
    const key = args[i];
    if (!key.startsWith("--") || !allowed.includes(key.slice(2))) {
      throw new UsageError(`unknown flag ${key}`);
    }
    if (i + 1 >= args.length) {
      throw new UsageError(`flag ${key} needs a value`);
    }
    out.set(key.slice(2), args[i + 1]);
  }
  return out;
}

function need(flags: Map<string, string>, key: string): string {
  const v = flags.get(key);
  if (v === undefined) {
    throw new UsageError(`missing --${key}`);
  }
  return v;
}

function parseSteps(value: string): number[] {
  const fields = value.split(",").filter((f) => f.length > 0);
  return fields.map((f) => {
    const n = Number(f);
    if (!Number.isInteger(n) || n < 0) {
      throw new UsageError(`bad step ${JSON.stringify(f)}`);
    }
    return n;
  });
}

function parseLim(value: string, name: string): [number, number] {
  const fields = value.split(",").map(Number);
  if (fields.length !== 2 || fields.some((v) => !Number.isFinite(v)) || fields[1] <= fields[0]) {
    throw new UsageError(`--${name} wants lo,hi with hi > lo`);
  }
  return [fields[0], fields[1]];
}

function jobFrom(flags: Map<string, string>, steps: number[]): PlotJob {
  const job: PlotJob = { inDir: need(flags, "in"), steps };
  const xlim = flags.get("xlim");
  const ylim = flags.get("ylim");
  if (xlim !== undefined) job.xlim = parseLim(xlim, "xlim");
  if (ylim !== undefined) job.ylim = parseLim(ylim, "ylim");
  return job;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "render": {
        const flags = parseFlags(rest, ["in", "steps", "out", "xlim", "ylim"]);
        const job = jobFrom(flags, parseSteps(need(flags, "steps")));
        writeFileSync(need(flags, "out"), renderPanelGrid(job));
        return 0;
      }
      case "snapshot": {
        const flags = parseFlags(rest, ["in", "step", "out", "xlim", "ylim"]);
        const job = jobFrom(flags, parseSteps(need(flags, "step")));
        writeFileSync(need(flags, "out"), renderSnapshot(job));
        return 0;
      }
      case "energy": {
        const flags = parseFlags(rest, ["in", "out"]);
        writeFileSync(need(flags, "out"), renderEnergyCurve(need(flags, "in")));
        return 0;
      }
      case "dump": {
        const flags = parseFlags(rest, ["in", "out-dir"]);
        const svgText = readFileSync(need(flags, "in"), "utf8");
        const outDir = need(flags, "out-dir");
        mkdirSync(outDir, { recursive: true });
        for (const series of extractSeries(svgText)) {
          writeFileSync(join(outDir, series.name), series.content);
        }
        return 0;
      }
      default:
        console.error(USAGE);
        return 2;
    }
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`error: ${err.message}`);
      console.error(USAGE);
      return 2;
    }
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
