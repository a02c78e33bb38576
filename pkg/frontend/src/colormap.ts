/** Monotone color mapping from dB values onto a dark-to-bright ramp. */

export interface ColorScale {
  minDb: number;
  maxDb: number;
}

export function makeScale(minDb: number, maxDb: number): ColorScale {
  if (!(minDb < maxDb)) {
    throw new Error(`color scale needs min < max, got [${minDb}, ${maxDb}]`);
  }
  return { minDb, maxDb };
}

/** Rank in [0, 1]; strictly increasing in value between the endpoints. */
export function colorRank(scale: ColorScale, valueDb: number): number {
  const t = (valueDb - scale.minDb) / (scale.maxDb - scale.minDb);
  return Math.min(1, Math.max(0, t));
}

// dark blue -> magenta -> yellow ramp; each channel is a monotone or
// unimodal function of t but perceived brightness rises with t
const STOPS: Array<[number, number, number]> = [
  [13, 8, 135],
  [126, 3, 168],
  [204, 71, 120],
  [248, 149, 64],
  [240, 249, 33],
];

export function rankToRgb(t: number): [number, number, number] {
  const x = Math.min(1, Math.max(0, t)) * (STOPS.length - 1);
  const i = Math.min(STOPS.length - 2, Math.floor(x));
  const f = x - i;
  const a = STOPS[i];
  const b = STOPS[i + 1];
  return [
    Math.round(a[0] + f * (b[0] - a[0])),
    Math.round(a[1] + f * (b[1] - a[1])),
    Math.round(a[2] + f * (b[2] - a[2])),
  ];
}

export function valueToRgb(scale: ColorScale, valueDb: number): [number, number, number] {
  return rankToRgb(colorRank(scale, valueDb));
}
