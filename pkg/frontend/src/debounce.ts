/** Trailing-edge debounce; each call restarts the timer. */

export interface Debounced<A extends unknown[]> {
  (...args: A): void;
  cancel(): void;
  flush(): void;
}

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): Debounced<A> {
  let timer: ReturnType<typeof setTimeout> | undefined;
  let lastArgs: A | null = null;

  const wrapped = (...args: A): void => {
    lastArgs = args;
    clearTimeout(timer);
    timer = setTimeout(() => {
      timer = undefined;
      const call = lastArgs as A;
      lastArgs = null;
      fn(...call);
    }, waitMs);
  };
  wrapped.cancel = (): void => {
    clearTimeout(timer);
    timer = undefined;
    lastArgs = null;
  };
  wrapped.flush = (): void => {
    if (timer === undefined || lastArgs === null) return;
    clearTimeout(timer);
    timer = undefined;
    const call = lastArgs;
    lastArgs = null;
    fn(...call);
  };
  return wrapped;
}
