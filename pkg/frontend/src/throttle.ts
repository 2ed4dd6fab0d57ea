// Rate limiter for drag-generated obstacle moves: at most one call per
// interval, with the final value flushed afterwards so the obstacle never
// lags behind where the pointer stopped.

export function throttle<A extends unknown[]>(
  fn: (...args: A) => void,
  intervalMs: number,
  now: () => number = () => Date.now(),
  schedule: (cb: () => void, ms: number) => void = (cb, ms) => {
    setTimeout(cb, ms);
  },
): (...args: A) => void {
  let last = -Infinity;
  let pending: A | null = null;
  let scheduled = false;

  const flush = () => {
    scheduled = false;
    if (pending !== null) {
      const args = pending;
      pending = null;
      last = now();
      fn(...args);
    }
  };

  return (...args: A) => {
    const t = now();
    if (t - last >= intervalMs) {
      last = t;
      fn(...args);
    } else {
      pending = args;
      if (!scheduled) {
        scheduled = true;
        schedule(flush, intervalMs - (t - last));
      }
    }
  };
}
