/** The three evaluation charts, each a pure function of the metrics rows. */

import { MetricsRow } from "./schema.js";
import { aggregateSeries, groupBy, mean, standardError } from "./stats.js";
import {
  DEFAULT_FRAME,
  Frame,
  PALETTE,
  axes,
  band,
  document,
  legend,
  linearScale,
  polyline,
  text,
} from "./svg.js";

export class ChartError extends Error {}

function methodColor(index: number): string {
  return PALETTE[index % PALETTE.length];
}

/** Mean post-burn-in target entropy vs team size, one line per method with
 * a shaded standard-error band. */
export function plotEntropyBySolver(
  rows: MetricsRow[],
  frame: Frame = DEFAULT_FRAME
): string {
  const trials = rows.filter((r) => r.kind === "trial" && !Number.isNaN(r.entropy));
  if (trials.length === 0) throw new ChartError("no trial rows in table");
  const byMethod = groupBy(trials, (r) => r.method);
  const methods = [...byMethod.keys()].sort();

  const series = methods.map((method) => ({
    method,
    points: aggregateSeries(
      byMethod.get(method)!.map((r) => [r.nR, r.entropy] as [number, number])
    ),
  }));
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const los = series.flatMap((s) => s.points.map((p) => p.mean - p.se));
  const his = series.flatMap((s) => s.points.map((p) => p.mean + p.se));
  const { margin, width, height } = frame;
  const xScale = linearScale(
    [Math.min(...xs), Math.max(...xs)],
    [margin.left, width - margin.right]
  );
  const pad = 0.05 * (Math.max(...his) - Math.min(...los) || 1);
  const yScale = linearScale(
    [Math.min(...los) - pad, Math.max(...his) + pad],
    [height - margin.bottom, margin.top]
  );

  const body: string[] = [];
  series.forEach(({ points }, i) => {
    const color = methodColor(i);
    if (points.length > 1) {
      body.push(
        band(
          points.map((p) => [xScale(p.x), yScale(p.mean + p.se)]),
          points.map((p) => [xScale(p.x), yScale(p.mean - p.se)]),
          color
        )
      );
    }
    body.push(
      polyline(points.map((p) => [xScale(p.x), yScale(p.mean)]), color)
    );
    for (const p of points) {
      body.push(
        `<circle cx="${xScale(p.x).toFixed(1)}" cy="${yScale(p.mean).toFixed(1)}" r="3" fill="${color}"/>`
      );
    }
  });
  body.push(
    axes({
      frame,
      xScale,
      yScale,
      xLabel: "number of robots",
      yLabel: "mean target entropy (bits)",
      xTicks: [...new Set(xs)].sort((a, b) => a - b),
    }),
    legend(frame, methods.map((m, i) => ({ label: m, color: methodColor(i) })))
  );
  return document(frame, "Target entropy by solver", body.join("\n"));
}

/** Mean normalized objective per method over the frozen subproblems, with
 * standard-error bars. */
export function plotNormalizedObjectives(
  rows: MetricsRow[],
  frame: Frame = DEFAULT_FRAME
): string {
  const replays = rows.filter(
    (r) => r.kind === "replay" && !Number.isNaN(r.normalizedObjective)
  );
  if (replays.length === 0) throw new ChartError("no replay rows in table");
  const byMethod = groupBy(replays, (r) => r.method);
  const methods = [...byMethod.keys()].sort(
    (a, b) =>
      mean(byMethod.get(b)!.map((r) => r.normalizedObjective)) -
      mean(byMethod.get(a)!.map((r) => r.normalizedObjective))
  );
  const stats = methods.map((m) => {
    const values = byMethod.get(m)!.map((r) => r.normalizedObjective);
    return { method: m, mean: mean(values), se: standardError(values) };
  });

  const { margin, width, height } = frame;
  const x0 = margin.left;
  const x1 = width - margin.right;
  const lo = Math.min(...stats.map((s) => s.mean - s.se), 0.8);
  const yScale = linearScale(
    [lo, 1.0],
    [height - margin.bottom, margin.top]
  );
  const slot = (x1 - x0) / stats.length;
  const barWidth = slot * 0.6;

  const body: string[] = [];
  stats.forEach((s, i) => {
    const cx = x0 + slot * (i + 0.5);
    const top = yScale(s.mean);
    const base = yScale(lo);
    body.push(
      `<rect x="${(cx - barWidth / 2).toFixed(1)}" y="${top.toFixed(1)}" ` +
        `width="${barWidth.toFixed(1)}" height="${(base - top).toFixed(1)}" ` +
        `fill="${methodColor(i)}" fill-opacity="0.85"/>`
    );
    if (s.se > 0) {
      const upper = yScale(s.mean + s.se);
      const lower = yScale(s.mean - s.se);
      body.push(
        `<line x1="${cx}" y1="${upper.toFixed(1)}" x2="${cx}" y2="${lower.toFixed(1)}" stroke="#222" stroke-width="1.5"/>`,
        `<line x1="${cx - 5}" y1="${upper.toFixed(1)}" x2="${cx + 5}" y2="${upper.toFixed(1)}" stroke="#222"/>`,
        `<line x1="${cx - 5}" y1="${lower.toFixed(1)}" x2="${cx + 5}" y2="${lower.toFixed(1)}" stroke="#222"/>`
      );
    }
    body.push(
      text(cx, height - margin.bottom + 18, s.method, {
        anchor: "middle",
        size: 11,
      })
    );
  });
  const yTicks = [0.8, 0.85, 0.9, 0.95, 1.0].filter((t) => t >= lo);
  for (const tick of yTicks) {
    const py = yScale(tick);
    body.push(
      `<line x1="${x0 - 5}" y1="${py.toFixed(1)}" x2="${x0}" y2="${py.toFixed(1)}" stroke="#333"/>`,
      text(x0 - 8, py + 4, tick.toFixed(2), { anchor: "end", size: 11 })
    );
  }
  body.push(
    `<line x1="${x0}" y1="${yScale(lo)}" x2="${x1}" y2="${yScale(lo)}" stroke="#333"/>`,
    `<line x1="${x0}" y1="${yScale(lo)}" x2="${x0}" y2="${margin.top}" stroke="#333"/>`,
    text(18, (margin.top + height - margin.bottom) / 2, "normalized objective", {
      anchor: "middle",
      rotate: true,
    })
  );
  return document(frame, "Objective values on common subproblems", body.join("\n"));
}

/** Redundancy per robot and objective per robot vs team size (the scaling
 * quantities), with standard-error bands. */
export function plotRedundancyScaling(
  rows: MetricsRow[],
  frame: Frame = DEFAULT_FRAME
): string {
  const reds = rows.filter(
    (r) => r.kind === "redundancy" && !Number.isNaN(r.redundancyPerRobot)
  );
  if (reds.length === 0) throw new ChartError("no redundancy rows in table");
  const redundancy = aggregateSeries(
    reds.map((r) => [r.nR, r.redundancyPerRobot] as [number, number])
  );
  const objective = aggregateSeries(
    reds
      .filter((r) => !Number.isNaN(r.objectivePerRobot))
      .map((r) => [r.nR, r.objectivePerRobot] as [number, number])
  );

  const { margin, width, height } = frame;
  const xs = redundancy.map((p) => p.x);
  const xScale = linearScale(
    [Math.min(...xs), Math.max(...xs)],
    [margin.left, width - margin.right]
  );
  const leftMax = Math.max(...redundancy.map((p) => p.mean + p.se)) * 1.08;
  const leftScale = linearScale([0, leftMax], [height - margin.bottom, margin.top]);
  const rightMax =
    (objective.length ? Math.max(...objective.map((p) => p.mean + p.se)) : 1) * 1.25;
  const rightScale = linearScale(
    [0, rightMax],
    [height - margin.bottom, margin.top]
  );

  const body: string[] = [];
  const [redColor, objColor] = [PALETTE[1], PALETTE[0]];
  if (redundancy.length > 1) {
    body.push(
      band(
        redundancy.map((p) => [xScale(p.x), leftScale(p.mean + p.se)]),
        redundancy.map((p) => [xScale(p.x), leftScale(p.mean - p.se)]),
        redColor
      )
    );
  }
  body.push(
    polyline(redundancy.map((p) => [xScale(p.x), leftScale(p.mean)]), redColor)
  );
  if (objective.length > 0) {
    if (objective.length > 1) {
      body.push(
        band(
          objective.map((p) => [xScale(p.x), rightScale(p.mean + p.se)]),
          objective.map((p) => [xScale(p.x), rightScale(p.mean - p.se)]),
          objColor
        )
      );
    }
    body.push(
      polyline(objective.map((p) => [xScale(p.x), rightScale(p.mean)]), objColor)
    );
  }
  // right-hand axis for the objective series
  const x1 = width - margin.right;
  for (const tick of [0, rightMax / 2, rightMax]) {
    const py = rightScale(tick);
    body.push(
      `<line x1="${x1}" y1="${py.toFixed(1)}" x2="${x1 + 5}" y2="${py.toFixed(1)}" stroke="#333"/>`,
      text(x1 + 8, py + 4, tick.toPrecision(2), { size: 11 })
    );
  }
  body.push(
    `<line x1="${x1}" y1="${height - margin.bottom}" x2="${x1}" y2="${margin.top}" stroke="#333"/>`,
    axes({
      frame,
      xScale,
      yScale: leftScale,
      xLabel: "number of robots",
      yLabel: "redundancy per robot",
      xTicks: [...new Set(xs)].sort((a, b) => a - b),
    }),
    legend(frame, [
      { label: "redundancy / robot", color: redColor },
      { label: "objective / robot", color: objColor },
    ])
  );
  return document(frame, "Scaling of objective and redundancy", body.join("\n"));
}
