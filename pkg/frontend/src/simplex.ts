/** Probability-vector arithmetic for the slider panel. */

const EPS = 1e-12;

/**
 * Set one coordinate and renormalize the rest so the vector stays on the
 * simplex while the untouched entries keep their mutual ratios. When the
 * untouched entries are all zero the remaining mass spreads evenly.
 */
export function setAndRenormalize(probs: number[], index: number, value: number): number[] {
  if (index < 0 || index >= probs.length) throw new Error(`slider index ${index} out of range`);
  const v = Math.min(1, Math.max(0, value));
  const rest = 1 - v;
  const othersSum = probs.reduce((acc, p, i) => (i === index ? acc : acc + p), 0);
  const out = probs.map((p, i) => {
    if (i === index) return v;
    if (othersSum > EPS) return (p / othersSum) * rest;
    return rest / (probs.length - 1);
  });
  return normalize(out);
}

export function normalize(probs: number[]): number[] {
  const total = probs.reduce((a, b) => a + b, 0);
  if (total <= EPS) return probs.map(() => 1 / probs.length);
  return probs.map((p) => p / total);
}

export function uniform(k: number): number[] {
  return new Array(k).fill(1 / k);
}

export function oneHot(k: number, index: number): number[] {
  const out = new Array(k).fill(0);
  out[index] = 1;
  return out;
}

export function interpolate(from: number[], to: number[], lambda: number): number[] {
  return from.map((p, i) => (1 - lambda) * p + lambda * to[i]);
}

/** Shannon entropy in nats with the 0 * ln 0 = 0 convention. */
export function entropy(probs: number[]): number {
  let h = 0;
  for (const p of probs) if (p > 0) h -= p * Math.log(p);
  return h;
}
