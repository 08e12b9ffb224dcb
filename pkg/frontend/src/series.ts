/** Pure aggregations from solver CSVs to plottable series. */

import { Table, num, requireColumns } from "./csv.js";

export interface BandSeries {
  label: string;
  x: number[];
  median: number[];
  min: number[];
  max: number[];
}

export interface Curve {
  label: string;
  x: number[];
  y: number[];
}

export interface BarGroup {
  label: string; // e.g. "200 agents dbs-hungarian"
  pathfindMs: number;
  reassignMs: number;
}

function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  const mid = Math.floor(sorted.length / 2);
  return sorted.length % 2 === 1
    ? sorted[mid]
    : (sorted[mid - 1] + sorted[mid]) / 2;
}

const strategyOf = (row: Record<string, string>) =>
  `${row.feedback}-${row.reassign}`;

/** Median normalized cost per agent count with min/max band, per strategy. */
export function costVsAgents(stats: Table): BandSeries[] {
  requireColumns(stats, [
    "agents",
    "feedback",
    "reassign",
    "normalized_cost",
    "status",
  ]);
  const groups = new Map<string, Map<number, number[]>>();
  for (const row of stats.rows) {
    if (row.status !== "ok") continue;
    const strategy = strategyOf(row);
    const agents = num(row, "agents");
    let byAgents = groups.get(strategy);
    if (!byAgents) groups.set(strategy, (byAgents = new Map()));
    let bucket = byAgents.get(agents);
    if (!bucket) byAgents.set(agents, (bucket = []));
    bucket.push(num(row, "normalized_cost"));
  }
  const out: BandSeries[] = [];
  for (const [strategy, byAgents] of [...groups.entries()].sort()) {
    const x = [...byAgents.keys()].sort((a, b) => a - b);
    out.push({
      label: strategy,
      x,
      median: x.map((n) => median(byAgents.get(n)!)),
      min: x.map((n) => Math.min(...byAgents.get(n)!)),
      max: x.map((n) => Math.max(...byAgents.get(n)!)),
    });
  }
  return out;
}

/** Improvement-over-time curve of one trace: 100*(init-best)/init. */
export function improvementCurve(trace: Table, label: string): Curve {
  requireColumns(trace, ["iter", "elapsed_ms", "best_flowtime"]);
  if (trace.rows.length === 0) {
    throw new Error("empty trace");
  }
  const init = num(trace.rows[0], "best_flowtime");
  const x: number[] = [];
  const y: number[] = [];
  for (const row of trace.rows) {
    x.push(num(row, "elapsed_ms") / 1000);
    y.push(init > 0 ? (100 * (init - num(row, "best_flowtime"))) / init : 0);
  }
  return { label, x, y };
}

/** Mean curve across runs, resampled onto the union of their time grids. */
export function meanCurve(curves: Curve[]): Curve & { lo: number[]; hi: number[] } {
  const grid = [...new Set(curves.flatMap((c) => c.x))].sort((a, b) => a - b);
  const at = (c: Curve, t: number): number => {
    // step interpolation: the best flowtime holds until the next record
    let v = c.y[0];
    for (let i = 0; i < c.x.length && c.x[i] <= t; i++) v = c.y[i];
    return v;
  };
  const samples = grid.map((t) => curves.map((c) => at(c, t)));
  return {
    label: "mean",
    x: grid,
    y: samples.map((s) => s.reduce((a, b) => a + b, 0) / s.length),
    lo: samples.map((s) => Math.min(...s)),
    hi: samples.map((s) => Math.max(...s)),
  };
}

/** Mean pathfinding vs reassignment time per (agents, strategy). */
export function timeProfile(stats: Table): BarGroup[] {
  requireColumns(stats, [
    "agents",
    "feedback",
    "reassign",
    "pathfind_ms",
    "reassign_ms",
    "status",
  ]);
  const groups = new Map<string, { pf: number[]; ra: number[] }>();
  for (const row of stats.rows) {
    if (row.status !== "ok") continue;
    const key = `${num(row, "agents")} agents ${strategyOf(row)}`;
    let g = groups.get(key);
    if (!g) groups.set(key, (g = { pf: [], ra: [] }));
    g.pf.push(num(row, "pathfind_ms"));
    g.ra.push(num(row, "reassign_ms"));
  }
  const mean = (v: number[]) => v.reduce((a, b) => a + b, 0) / v.length;
  return [...groups.entries()]
    .sort()
    .map(([label, g]) => ({
      label,
      pathfindMs: mean(g.pf),
      reassignMs: mean(g.ra),
    }));
}
