/**
 * Frame-level spectral analysis for the deterministic extractors:
 * Hann-windowed frames, a radix-2 FFT, and log power summed into
 * geometrically spaced bands between 50 Hz and 7 kHz.
 */

export const BAND_LO_HZ = 50;
export const BAND_HI_HZ = 7000;

const POWER_FLOOR = 1e-12;

/** In-place iterative radix-2 FFT; lengths must be a power of two. */
export function fftRadix2(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  if (n !== im.length || (n & (n - 1)) !== 0) {
    throw new Error(`FFT length must be a power of two, got ${n}`);
  }
  // bit-reversal permutation
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      [re[i], re[j]] = [re[j], re[i]];
      [im[i], im[j]] = [im[j], im[i]];
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const angle = (-2 * Math.PI) / len;
    const wRe = Math.cos(angle);
    const wIm = Math.sin(angle);
    for (let start = 0; start < n; start += len) {
      let curRe = 1;
      let curIm = 0;
      for (let k = 0; k < len / 2; k++) {
        const a = start + k;
        const b = start + k + len / 2;
        const tRe = re[b] * curRe - im[b] * curIm;
        const tIm = re[b] * curIm + im[b] * curRe;
        re[b] = re[a] - tRe;
        im[b] = im[a] - tIm;
        re[a] += tRe;
        im[a] += tIm;
        const nextRe = curRe * wRe - curIm * wIm;
        curIm = curRe * wIm + curIm * wRe;
        curRe = nextRe;
      }
    }
  }
}

export function hannWindow(length: number): Float64Array {
  const w = new Float64Array(length);
  for (let i = 0; i < length; i++) {
    w[i] = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / (length - 1));
  }
  return w;
}

/** Geometric band edges, nBands + 1 values from lo to hi. */
export function bandEdges(nBands: number, lo = BAND_LO_HZ, hi = BAND_HI_HZ): Float64Array {
  const edges = new Float64Array(nBands + 1);
  const ratio = Math.log(hi / lo) / nBands;
  for (let i = 0; i <= nBands; i++) {
    edges[i] = lo * Math.exp(ratio * i);
  }
  return edges;
}

function nextPowerOfTwo(n: number): number {
  let p = 1;
  while (p < n) p <<= 1;
  return p;
}

/**
 * Per-frame band log-powers over the whole signal.
 *
 * Frames of `frameLen` samples step by `hop`; each is Hann-windowed,
 * zero-padded to a power of two, and its FFT power is summed per band
 * and converted to dB against a fixed floor (so silence stays finite).
 * Signals shorter than one frame yield an empty list.
 */
export function frameBandLogPowers(
  samples: Float64Array,
  sampleRate: number,
  frameLen: number,
  hop: number,
  nBands: number,
): Float64Array[] {
  const window = hannWindow(frameLen);
  const fftLen = nextPowerOfTwo(frameLen);
  const edges = bandEdges(nBands);
  const binHz = sampleRate / fftLen;

  // Precompute each bin's band, -1 when outside every band.
  const nBins = fftLen / 2 + 1;
  const bandOfBin = new Int32Array(nBins).fill(-1);
  for (let k = 0; k < nBins; k++) {
    const f = k * binHz;
    if (f < edges[0] || f >= edges[nBands]) continue;
    let b = 0;
    while (b < nBands - 1 && f >= edges[b + 1]) b++;
    bandOfBin[k] = b;
  }

  const frames: Float64Array[] = [];
  const re = new Float64Array(fftLen);
  const im = new Float64Array(fftLen);
  for (let start = 0; start + frameLen <= samples.length; start += hop) {
    re.fill(0);
    im.fill(0);
    for (let i = 0; i < frameLen; i++) {
      re[i] = samples[start + i] * window[i];
    }
    fftRadix2(re, im);
    const bands = new Float64Array(nBands).fill(POWER_FLOOR);
    for (let k = 0; k < nBins; k++) {
      const b = bandOfBin[k];
      if (b >= 0) bands[b] += re[k] * re[k] + im[k] * im[k];
    }
    for (let b = 0; b < nBands; b++) {
      bands[b] = 10 * Math.log10(bands[b]);
    }
    frames.push(bands);
  }
  return frames;
}
