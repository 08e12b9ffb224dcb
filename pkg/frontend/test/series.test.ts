import { readFileSync } from "fs";
import { describe, expect, it } from "vitest";

import { SchemaError, parseCsv } from "../src/csv.js";
import {
  costVsAgents,
  improvementCurve,
  meanCurve,
  timeProfile,
} from "../src/series.js";

const FIX = new URL("../fixtures/", import.meta.url).pathname;

const bench = () => parseCsv(readFileSync(FIX + "bench.csv", "utf8"));

describe("csv", () => {
  it("rejects ragged rows", () => {
    expect(() => parseCsv("a,b\n1,2,3\n")).toThrow(SchemaError);
  });

  it("names the missing column", () => {
    const table = parseCsv("a,b\n1,2\n");
    expect(() => costVsAgents(table)).toThrow(/agents/);
  });
});

describe("cost-vs-agents", () => {
  it("medians and bands equal re-aggregation of the CSV", () => {
    const table = bench();
    const series = costVsAgents(table);
    // independent re-aggregation
    const byKey = new Map<string, number[]>();
    for (const row of table.rows) {
      if (row.status !== "ok") continue;
      const key = `${row.feedback}-${row.reassign}|${row.agents}`;
      const list = byKey.get(key) ?? [];
      list.push(Number(row.normalized_cost));
      byKey.set(key, list);
    }
    const med = (v: number[]) => {
      const s = [...v].sort((a, b) => a - b);
      const m = Math.floor(s.length / 2);
      return s.length % 2 ? s[m] : (s[m - 1] + s[m]) / 2;
    };
    let checked = 0;
    for (const s of series) {
      s.x.forEach((agents, i) => {
        const vals = byKey.get(`${s.label}|${agents}`)!;
        expect(s.median[i]).toBe(med(vals));
        expect(s.min[i]).toBe(Math.min(...vals));
        expect(s.max[i]).toBe(Math.max(...vals));
        checked++;
      });
    }
    expect(checked).toBeGreaterThanOrEqual(4);
    expect(series.length).toBe(2); // two strategies -> two labeled series
  });

  it("single row gives a degenerate band", () => {
    const table = parseCsv(
      "agents,feedback,reassign,normalized_cost,status\n" +
        "10,dbs,hungarian,1.25,ok\n",
    );
    const [s] = costVsAgents(table);
    expect(s.x).toEqual([10]);
    expect(s.median).toEqual([1.25]);
    expect(s.min).toEqual([1.25]);
    expect(s.max).toEqual([1.25]);
  });
});

describe("improvement-over-time", () => {
  it("is monotone non-decreasing and ends at the stats imprv_pct", () => {
    for (const seed of [0, 1, 2]) {
      const trace = parseCsv(readFileSync(`${FIX}run_s${seed}.trace.csv`, "utf8"));
      const stats = parseCsv(readFileSync(`${FIX}run_s${seed}.stats.csv`, "utf8"));
      const curve = improvementCurve(trace, `s${seed}`);
      for (let i = 1; i < curve.y.length; i++) {
        expect(curve.y[i]).toBeGreaterThanOrEqual(curve.y[i - 1]);
      }
      const reported = Number(stats.rows[0].imprv_pct);
      expect(curve.y[curve.y.length - 1]).toBeCloseTo(reported, 3);
    }
  });

  it("flat trace gives a horizontal zero line", () => {
    const trace = parseCsv(
      "iter,elapsed_ms,best_flowtime\n0,1,50\n1,2,50\n2,3,50\n",
    );
    const curve = improvementCurve(trace, "flat");
    expect(curve.y).toEqual([0, 0, 0]);
  });

  it("mean curve brackets every run", () => {
    const curves = [0, 1, 2].map((seed) =>
      improvementCurve(
        parseCsv(readFileSync(`${FIX}run_s${seed}.trace.csv`, "utf8")),
        `s${seed}`,
      ),
    );
    const m = meanCurve(curves);
    m.x.forEach((_, i) => {
      expect(m.lo[i]).toBeLessThanOrEqual(m.y[i]);
      expect(m.y[i]).toBeLessThanOrEqual(m.hi[i]);
    });
  });
});

describe("time-profile", () => {
  it("bar heights equal CSV means", () => {
    const table = bench();
    const groups = timeProfile(table);
    // independent recomputation for one group
    const rows = table.rows.filter(
      (r) => r.status === "ok" && r.agents === "8" && r.feedback === "dbs",
    );
    const mean = (k: string) =>
      rows.reduce((a, r) => a + Number(r[k]), 0) / rows.length;
    const g = groups.find((g) => g.label === "8 agents dbs-hungarian")!;
    expect(g.pathfindMs).toBe(mean("pathfind_ms"));
    expect(g.reassignMs).toBe(mean("reassign_ms"));
  });

  it("zero reassignment time yields a zero-height bar value", () => {
    const table = parseCsv(
      "agents,feedback,reassign,pathfind_ms,reassign_ms,status\n" +
        "5,dbs,pibt,120,0,ok\n",
    );
    const [g] = timeProfile(table);
    expect(g.reassignMs).toBe(0);
  });
});
