/** Small statistics helpers for aggregating metric rows. */

export function mean(values: number[]): number {
  if (values.length === 0) return NaN;
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export function sampleStd(values: number[]): number {
  if (values.length < 2) return 0;
  const m = mean(values);
  const ss = values.reduce((acc, v) => acc + (v - m) * (v - m), 0);
  return Math.sqrt(ss / (values.length - 1));
}

/** Standard error of the mean (what the shaded bands depict). */
export function standardError(values: number[]): number {
  if (values.length < 2) return 0;
  return sampleStd(values) / Math.sqrt(values.length);
}

export function groupBy<T, K extends string | number>(
  items: T[],
  key: (item: T) => K
): Map<K, T[]> {
  const out = new Map<K, T[]>();
  for (const item of items) {
    const k = key(item);
    const bucket = out.get(k);
    if (bucket) bucket.push(item);
    else out.set(k, [item]);
  }
  return out;
}

export interface SeriesPoint {
  x: number;
  mean: number;
  se: number;
}

/** Aggregate (x, value) pairs into a mean/SE series sorted by x. */
export function aggregateSeries(pairs: Array<[number, number]>): SeriesPoint[] {
  const byX = groupBy(pairs, ([x]) => x);
  const points: SeriesPoint[] = [];
  for (const [x, group] of byX) {
    const values = group.map(([, v]) => v).filter((v) => !Number.isNaN(v));
    if (values.length === 0) continue;
    points.push({ x, mean: mean(values), se: standardError(values) });
  }
  points.sort((a, b) => a.x - b.x);
  return points;
}
