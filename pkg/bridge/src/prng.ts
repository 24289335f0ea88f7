/**
 * Deterministic 32-bit PRNG (mulberry32). Extraction must be replayable
 * byte for byte from a seed, so nothing here touches Math.random.
 */

export type Rng = () => number;

/** Uniform floats in [0, 1), identical sequence for identical seeds. */
export function mulberry32(seed: number): Rng {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let z = state;
    z = Math.imul(z ^ (z >>> 15), z | 1);
    z ^= z + Math.imul(z ^ (z >>> 7), z | 61);
    return ((z ^ (z >>> 14)) >>> 0) / 4294967296;
  };
}

/** Integer in [0, bound). */
export function nextInt(rng: Rng, bound: number): number {
  return Math.floor(rng() * bound);
}
