import { mkdtempSync, readFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { run } from "../src/cli.js";
import { parseCsv } from "../src/csv.js";
import { costVsAgents, timeProfile } from "../src/series.js";
import { readSeries, renderBandChart } from "../src/svg.js";

const FIX = new URL("../fixtures/", import.meta.url).pathname;

describe("rendering", () => {
  it("embeds the exact data series in the SVG", () => {
    const table = parseCsv(readFileSync(FIX + "bench.csv", "utf8"));
    const series = costVsAgents(table);
    const svg = renderBandChart(series, "t", "x", "y");
    const embedded = readSeries(svg) as { kind: string; series: typeof series };
    expect(embedded.kind).toBe("band");
    expect(embedded.series).toEqual(JSON.parse(JSON.stringify(series)));
    expect(svg).toContain("<polyline");
    expect(svg).toContain("<polygon"); // min/max band
  });

  it("cli renders all three kinds and round-trips the series", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));

    const costOut = run([
      "cost-vs-agents", "--in", FIX + "bench.csv", "--out", join(dir, "cost.svg"),
    ]);
    const costSvg = readFileSync(costOut, "utf8");
    const cost = readSeries(costSvg) as any;
    const expect1 = costVsAgents(parseCsv(readFileSync(FIX + "bench.csv", "utf8")));
    expect(cost.series).toEqual(JSON.parse(JSON.stringify(expect1)));

    const curveOut = run([
      "improvement-over-time",
      "--in", FIX + "run_s0.trace.csv", FIX + "run_s1.trace.csv", FIX + "run_s2.trace.csv",
      "--out", join(dir, "imprv.svg"),
    ]);
    const curves = readSeries(readFileSync(curveOut, "utf8")) as any;
    expect(curves.curves.length).toBe(4); // three runs + mean
    expect(curves.band).toBeDefined();

    const barsOut = run([
      "time-profile", "--in", FIX + "bench.csv", "--out", join(dir, "time.svg"),
    ]);
    const bars = readSeries(readFileSync(barsOut, "utf8")) as any;
    const expect2 = timeProfile(parseCsv(readFileSync(FIX + "bench.csv", "utf8")));
    expect(bars.groups).toEqual(JSON.parse(JSON.stringify(expect2)));
  });

  it("renames .png outputs to .svg", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const out = run([
      "cost-vs-agents", "--in", FIX + "bench.csv", "--out", join(dir, "fig.png"),
    ]);
    expect(out.endsWith("fig.svg")).toBe(true);
    expect(readFileSync(out, "utf8")).toContain("<svg");
  });
});
