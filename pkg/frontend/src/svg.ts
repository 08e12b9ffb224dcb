/** Minimal hand-assembled SVG charts: line+band plots and paired bars.
 *
 * Every chart embeds its numeric series as JSON inside <metadata>, so the
 * rendered data can be checked (and re-used) without re-parsing geometry.
 */

import { BandSeries, BarGroup, Curve } from "./series.js";

const W = 760;
const H = 480;
const MARGIN = { left: 64, right: 24, top: 40, bottom: 48 };

const PALETTE = [
  "#4361ee",
  "#e63946",
  "#2d6a4f",
  "#f4a261",
  "#7b2cbf",
  "#118ab2",
  "#6b705c",
];

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

interface Scale {
  (v: number): number;
}

function linScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

function ticks(lo: number, hi: number, n = 6): number[] {
  if (lo === hi) return [lo];
  const raw = (hi - lo) / n;
  const mag = 10 ** Math.floor(Math.log10(raw));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => s >= raw)!;
  const first = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = first; v <= hi + 1e-9; v += step) out.push(Number(v.toFixed(10)));
  return out;
}

function fmt(v: number): string {
  return Math.abs(v) >= 1000
    ? v.toFixed(0)
    : Number.isInteger(v)
      ? String(v)
      : String(Number(v.toPrecision(4)));
}

function frame(
  title: string,
  xLabel: string,
  yLabel: string,
  sx: Scale,
  sy: Scale,
  xTicks: number[],
  yTicks: number[],
): string {
  const parts: string[] = [];
  parts.push(
    `<text x="${W / 2}" y="22" text-anchor="middle" font-size="15" font-weight="bold">${esc(title)}</text>`,
  );
  const x0 = MARGIN.left;
  const x1 = W - MARGIN.right;
  const y0 = H - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`,
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`,
  );
  for (const t of xTicks) {
    const px = sx(t);
    parts.push(
      `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="#333"/>`,
      `<text x="${px}" y="${y0 + 18}" text-anchor="middle" font-size="11">${fmt(t)}</text>`,
    );
  }
  for (const t of yTicks) {
    const py = sy(t);
    parts.push(
      `<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`,
      `<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#eee"/>`,
      `<text x="${x0 - 8}" y="${py + 4}" text-anchor="end" font-size="11">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${H - 10}" text-anchor="middle" font-size="12">${esc(xLabel)}</text>`,
    `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
  );
  return parts.join("\n");
}

function legend(labels: string[]): string {
  return labels
    .map((label, i) => {
      const x = MARGIN.left + 12 + i * 170;
      const y = MARGIN.top - 8;
      const color = PALETTE[i % PALETTE.length];
      return (
        `<rect x="${x}" y="${y - 9}" width="12" height="12" fill="${color}"/>` +
        `<text x="${x + 16}" y="${y + 2}" font-size="12">${esc(label)}</text>`
      );
    })
    .join("\n");
}

function document(body: string, payload: unknown): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">\n` +
    `<metadata id="series">${esc(JSON.stringify(payload))}</metadata>\n` +
    `<rect width="${W}" height="${H}" fill="white"/>\n` +
    body +
    `\n</svg>\n`
  );
}

/** Median lines with min/max bands (cost vs agent count). */
export function renderBandChart(
  series: BandSeries[],
  title: string,
  xLabel: string,
  yLabel: string,
): string {
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => [...s.min, ...s.max]);
  const sx = linScale(Math.min(...xs), Math.max(...xs), MARGIN.left, W - MARGIN.right);
  const lo = Math.min(...ys);
  const hi = Math.max(...ys);
  const pad = (hi - lo || 1) * 0.08;
  const sy = linScale(lo - pad, hi + pad, H - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    if (s.x.length > 1) {
      const band = [
        ...s.x.map((v, j) => `${sx(v)},${sy(s.max[j])}`),
        ...[...s.x].reverse().map((v, j) => {
          const k = s.x.length - 1 - j;
          return `${sx(v)},${sy(s.min[k])}`;
        }),
      ].join(" ");
      parts.push(`<polygon points="${band}" fill="${color}" opacity="0.15"/>`);
    }
    const line = s.x.map((v, j) => `${sx(v)},${sy(s.median[j])}`).join(" ");
    parts.push(
      `<polyline points="${line}" fill="none" stroke="${color}" stroke-width="2"/>`,
    );
    s.x.forEach((v, j) =>
      parts.push(
        `<circle cx="${sx(v)}" cy="${sy(s.median[j])}" r="3" fill="${color}"/>`,
      ),
    );
  });
  const body =
    frame(title, xLabel, yLabel, sx, sy, ticks(Math.min(...xs), Math.max(...xs)), ticks(lo, hi)) +
    "\n" +
    parts.join("\n") +
    "\n" +
    legend(series.map((s) => s.label));
  return document(body, { kind: "band", series });
}

/** Plain curves (improvement over time); optional band around the last one. */
export function renderCurveChart(
  curves: Curve[],
  title: string,
  xLabel: string,
  yLabel: string,
  band?: { x: number[]; lo: number[]; hi: number[] },
): string {
  const xs = curves.flatMap((c) => c.x);
  const ys = curves.flatMap((c) => c.y).concat(band ? [...band.lo, ...band.hi] : []);
  const sx = linScale(Math.min(...xs), Math.max(...xs), MARGIN.left, W - MARGIN.right);
  const lo = Math.min(0, ...ys);
  const hi = Math.max(...ys, 1e-9);
  const pad = (hi - lo || 1) * 0.08;
  const sy = linScale(lo - pad, hi + pad, H - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  if (band && band.x.length > 1) {
    const pts = [
      ...band.x.map((v, j) => `${sx(v)},${sy(band.hi[j])}`),
      ...[...band.x].reverse().map((v, j) => {
        const k = band.x.length - 1 - j;
        return `${sx(v)},${sy(band.lo[k])}`;
      }),
    ].join(" ");
    parts.push(`<polygon points="${pts}" fill="#999" opacity="0.2"/>`);
  }
  curves.forEach((c, i) => {
    const color = PALETTE[i % PALETTE.length];
    const line = c.x.map((v, j) => `${sx(v)},${sy(c.y[j])}`).join(" ");
    parts.push(
      `<polyline points="${line}" fill="none" stroke="${color}" stroke-width="2"/>`,
    );
  });
  const body =
    frame(title, xLabel, yLabel, sx, sy, ticks(Math.min(...xs), Math.max(...xs)), ticks(lo, hi)) +
    "\n" +
    parts.join("\n") +
    "\n" +
    legend(curves.map((c) => c.label));
  return document(body, { kind: "curves", curves, band });
}

/** Paired bars: pathfinding vs reassignment time per group. */
export function renderTimeProfile(groups: BarGroup[], title: string): string {
  const maxV = Math.max(...groups.map((g) => Math.max(g.pathfindMs, g.reassignMs)), 1);
  const sy = linScale(0, maxV * 1.08, H - MARGIN.bottom, MARGIN.top);
  const x0 = MARGIN.left;
  const span = W - MARGIN.right - x0;
  const slot = span / Math.max(groups.length, 1);
  const barW = Math.min(34, slot / 3);

  const parts: string[] = [];
  groups.forEach((g, i) => {
    const cx = x0 + slot * (i + 0.5);
    const y0 = H - MARGIN.bottom;
    const bars: Array<[number, string]> = [
      [g.pathfindMs, PALETTE[0]],
      [g.reassignMs, PALETTE[3]],
    ];
    bars.forEach(([v, color], j) => {
      const bx = cx - barW + j * barW;
      parts.push(
        `<rect x="${bx}" y="${sy(v)}" width="${barW - 2}" height="${y0 - sy(v)}" fill="${color}"/>`,
      );
    });
    parts.push(
      `<text x="${cx}" y="${y0 + 16}" text-anchor="middle" font-size="10">${esc(g.label)}</text>`,
    );
  });
  const yTicks = ticks(0, maxV);
  const frameParts =
    `<text x="${W / 2}" y="22" text-anchor="middle" font-size="15" font-weight="bold">${esc(title)}</text>` +
    `<line x1="${x0}" y1="${H - MARGIN.bottom}" x2="${W - MARGIN.right}" y2="${H - MARGIN.bottom}" stroke="#333"/>` +
    `<line x1="${x0}" y1="${H - MARGIN.bottom}" x2="${x0}" y2="${MARGIN.top}" stroke="#333"/>` +
    yTicks
      .map(
        (t) =>
          `<line x1="${x0 - 4}" y1="${sy(t)}" x2="${x0}" y2="${sy(t)}" stroke="#333"/>` +
          `<text x="${x0 - 8}" y="${sy(t) + 4}" text-anchor="end" font-size="11">${fmt(t)}</text>`,
      )
      .join("\n") +
    `<text x="16" y="${H / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 ${H / 2})">time (ms)</text>`;
  const body =
    frameParts +
    "\n" +
    parts.join("\n") +
    "\n" +
    legend(["pathfinding", "reassignment"]);
  return document(body, { kind: "bars", groups });
}

/** Pull the embedded numeric series back out of a rendered chart. */
export function readSeries(svg: string): unknown {
  const match = svg.match(/<metadata id="series">([\s\S]*?)<\/metadata>/);
  if (!match) throw new Error("no embedded series metadata");
  const unescaped = match[1]
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&amp;/g, "&");
  return JSON.parse(unescaped);
}
