// Trailing-edge debounce: rapid calls collapse into one invocation with the
// last arguments after the delay settles.

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  delayMs: number,
): ((...args: A) => void) & { cancel: () => void; flush: () => void } {
  let timeoutId: ReturnType<typeof setTimeout> | null = null;
  let pending: A | null = null;

  const debounced = (...args: A) => {
    pending = args;
    if (timeoutId) clearTimeout(timeoutId);
    timeoutId = setTimeout(() => {
      timeoutId = null;
      const args = pending as A;
      pending = null;
      fn(...args);
    }, delayMs);
  };

  debounced.cancel = () => {
    if (timeoutId) clearTimeout(timeoutId);
    timeoutId = null;
    pending = null;
  };

  debounced.flush = () => {
    if (timeoutId && pending) {
      clearTimeout(timeoutId);
      const args = pending;
      timeoutId = null;
      pending = null;
      fn(...args);
    }
  };

  return debounced;
}
