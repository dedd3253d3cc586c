// Window enumeration matching the engine exactly. Both sides run IEEE
// doubles, so identical arithmetic gives identical start/len values and the
// file backend's keys line up without tolerance games.

export interface Window {
  start_s: number;
  len_s: number;
}

export function windowCount(durationS: number, windowLenS: number, hopS: number): number {
  if (durationS < windowLenS) return 1;
  return Math.floor((durationS - windowLenS) / hopS) + 1;
}

export function generateWindows(durationS: number, windowLenS: number, hopS: number): Window[] {
  if (!(durationS > 0) || !Number.isFinite(durationS)) {
    throw new Error(`duration must be positive and finite, got ${durationS}`);
  }
  if (!(windowLenS > 0) || !(hopS > 0)) {
    throw new Error(`window and hop must be positive, got ${windowLenS}, ${hopS}`);
  }
  if (durationS < windowLenS) {
    return [{ start_s: 0.0, len_s: durationS }];
  }
  const n = windowCount(durationS, windowLenS, hopS);
  const out: Window[] = [];
  for (let i = 0; i < n; i++) {
    out.push({ start_s: i * hopS, len_s: windowLenS });
  }
  return out;
}

/** Whole-clip window capped at the model's maximum, for the "none" strategy. */
export function truncatedWindow(durationS: number, windowLenS: number): Window {
  return { start_s: 0.0, len_s: Math.min(durationS, windowLenS) };
}
