/**
 * Seeded Lloyd k-means with k-means++ initialization. Deterministic for
 * a given seed so unit extraction replays byte for byte.
 */

import { mulberry32, nextInt, type Rng } from "./prng.js";

export interface KmeansResult {
  centroids: Float64Array[];
  /** Index of the nearest centroid per input point. */
  assignments: Uint16Array;
}

function squaredDistance(a: Float64Array, b: Float64Array): number {
  let sum = 0;
  for (let i = 0; i < a.length; i++) {
    const d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

export function nearestCentroid(point: Float64Array, centroids: Float64Array[]): number {
  let best = 0;
  let bestDist = Infinity;
  for (let c = 0; c < centroids.length; c++) {
    const dist = squaredDistance(point, centroids[c]);
    if (dist < bestDist) {
      best = c;
      bestDist = dist;
    }
  }
  return best;
}

function plusPlusInit(points: Float64Array[], k: number, rng: Rng): Float64Array[] {
  const centroids: Float64Array[] = [points[nextInt(rng, points.length)].slice()];
  const dist = new Float64Array(points.length).fill(Infinity);
  while (centroids.length < k) {
    const latest = centroids[centroids.length - 1];
    let total = 0;
    for (let i = 0; i < points.length; i++) {
      dist[i] = Math.min(dist[i], squaredDistance(points[i], latest));
      total += dist[i];
    }
    let pick: number;
    if (total === 0) {
      pick = nextInt(rng, points.length); // all remaining mass identical
    } else {
      let target = rng() * total;
      pick = points.length - 1;
      for (let i = 0; i < points.length; i++) {
        target -= dist[i];
        if (target <= 0) {
          pick = i;
          break;
        }
      }
    }
    centroids.push(points[pick].slice());
  }
  return centroids;
}

/**
 * Cluster points into k groups.
 *
 * Iterates until assignments stop changing or `maxIter` passes. An
 * emptied cluster is reseeded with the point farthest from its current
 * centroid, so k never silently shrinks.
 */
export function kmeans(points: Float64Array[], k: number, seed: number, maxIter = 100): KmeansResult {
  if (k < 1) throw new Error(`k must be positive, got ${k}`);
  if (points.length < k) {
    throw new Error(`need at least ${k} points for ${k} clusters, got ${points.length}`);
  }
  const dim = points[0].length;
  const rng = mulberry32(seed);
  const centroids = plusPlusInit(points, k, rng);
  const assignments = new Uint16Array(points.length);

  for (let iter = 0; iter < maxIter; iter++) {
    let changed = false;
    for (let i = 0; i < points.length; i++) {
      const c = nearestCentroid(points[i], centroids);
      if (c !== assignments[i]) {
        assignments[i] = c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    const sums = centroids.map(() => new Float64Array(dim));
    const counts = new Uint32Array(k);
    for (let i = 0; i < points.length; i++) {
      const c = assignments[i];
      counts[c]++;
      const sum = sums[c];
      for (let d = 0; d < dim; d++) sum[d] += points[i][d];
    }
    for (let c = 0; c < k; c++) {
      if (counts[c] === 0) {
        // reseed from the globally farthest point
        let farthest = 0;
        let farthestDist = -1;
        for (let i = 0; i < points.length; i++) {
          const dist = squaredDistance(points[i], centroids[assignments[i]]);
          if (dist > farthestDist) {
            farthest = i;
            farthestDist = dist;
          }
        }
        centroids[c] = points[farthest].slice();
        continue;
      }
      for (let d = 0; d < dim; d++) centroids[c][d] = sums[c][d] / counts[c];
    }
  }

  for (let i = 0; i < points.length; i++) {
    assignments[i] = nearestCentroid(points[i], centroids);
  }
  return { centroids, assignments };
}
