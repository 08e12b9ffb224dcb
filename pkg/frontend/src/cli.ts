#!/usr/bin/env node
/** plots <kind> --in FILE... --out FILE.svg
 *
 * kinds: cost-vs-agents (stats csv), improvement-over-time (trace csv...),
 * time-profile (stats csv). Output is an SVG image; a .png output path is
 * rewritten to .svg (no rasterizer dependency).
 */

import { readFileSync, writeFileSync } from "fs";
import { basename } from "path";

import { parseCsv } from "./csv.js";
import {
  costVsAgents,
  improvementCurve,
  meanCurve,
  timeProfile,
} from "./series.js";
import {
  renderBandChart,
  renderCurveChart,
  renderTimeProfile,
} from "./svg.js";

interface Args {
  kind: string;
  inputs: string[];
  out: string;
}

function parseArgs(argv: string[]): Args {
  const [kind, ...rest] = argv;
  const inputs: string[] = [];
  let out = "";
  for (let i = 0; i < rest.length; i++) {
    if (rest[i] === "--in") {
      while (i + 1 < rest.length && !rest[i + 1].startsWith("--")) {
        inputs.push(rest[++i]);
      }
    } else if (rest[i] === "--out") {
      out = rest[++i] ?? "";
    } else {
      throw new Error(`unknown argument ${rest[i]}`);
    }
  }
  if (!kind || inputs.length === 0 || !out) {
    throw new Error(
      "usage: plots <cost-vs-agents|improvement-over-time|time-profile> --in FILE... --out FILE.svg",
    );
  }
  return { kind, inputs, out };
}

export function run(argv: string[]): string {
  const args = parseArgs(argv);
  let svg: string;
  if (args.kind === "cost-vs-agents") {
    const table = parseCsv(readFileSync(args.inputs[0], "utf8"));
    svg = renderBandChart(
      costVsAgents(table),
      "Normalized cost vs agents (median, min-max band)",
      "agents",
      "normalized cost",
    );
  } else if (args.kind === "improvement-over-time") {
    const curves = args.inputs.map((path) =>
      improvementCurve(parseCsv(readFileSync(path, "utf8")), basename(path)),
    );
    const band =
      curves.length > 1
        ? (() => {
            const m = meanCurve(curves);
            return { curves: [...curves, m], band: { x: m.x, lo: m.lo, hi: m.hi } };
          })()
        : { curves, band: undefined };
    svg = renderCurveChart(
      band.curves,
      "Improvement over time",
      "time (s)",
      "improvement (%)",
      band.band,
    );
  } else if (args.kind === "time-profile") {
    const table = parseCsv(readFileSync(args.inputs[0], "utf8"));
    svg = renderTimeProfile(
      timeProfile(table),
      "Pathfinding vs reassignment time",
    );
  } else {
    throw new Error(`unknown plot kind ${args.kind}`);
  }

  let out = args.out;
  if (out.endsWith(".png")) {
    out = out.slice(0, -4) + ".svg";
    console.error(`note: writing SVG; output renamed to ${out}`);
  }
  writeFileSync(out, svg);
  return out;
}

const isMain =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(basename(process.argv[1]));
if (isMain) {
  try {
    const out = run(process.argv.slice(2));
    console.log(`wrote ${out}`);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(1);
  }
}
