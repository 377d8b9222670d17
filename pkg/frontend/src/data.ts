/**
 * Episode tensors, normalization, deterministic splits, and the bilinear
 * reference predictor used as the sanity floor.
 */

import * as tf from '@tensorflow/tfjs';
import { Episode, Header } from './interchange.js';

export interface SplitIndices {
  train: number[];
  val: number[];
}

/** Deterministic shuffle-split by a small multiplicative PRNG. */
export function splitEpisodes(count: number, valFraction: number, seed: number): SplitIndices {
  const order = [...Array(count).keys()];
  let state = (seed >>> 0) || 1;
  const next = () => {
    // xorshift32
    state ^= state << 13;
    state >>>= 0;
    state ^= state >> 17;
    state ^= state << 5;
    state >>>= 0;
    return state / 0x100000000;
  };
  for (let i = count - 1; i > 0; i--) {
    const j = Math.floor(next() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  const valCount = Math.max(1, Math.round(count * valFraction));
  return { val: order.slice(0, valCount), train: order.slice(valCount) };
}

/** Scale chosen so the target pixel magnitudes sit near unity during training. */
export function normalizationScale(episodes: Episode[], indices: number[]): number {
  let peak = 0;
  for (const idx of indices) {
    for (const v of episodes[idx].target) {
      if (v > peak) peak = v;
    }
  }
  return peak > 0 ? 1.0 / peak : 1.0;
}

export function episodeTensors(
  episodes: Episode[],
  indices: number[],
  header: Header,
  scale: number,
): { inputs: tf.Tensor5D; targets: tf.Tensor4D } {
  const s = header.s;
  const lowLen = header.m_v * header.m_h;
  const highLen = header.M_v * header.M_h;
  const n = indices.length;
  const xs = new Float32Array(n * s * lowLen * 2);
  const ys = new Float32Array(n * highLen * 2);
  indices.forEach((epIdx, i) => {
    const ep = episodes[epIdx];
    for (let step = 0; step < s; step++) {
      const img = ep.inputs[step];
      for (let p = 0; p < lowLen; p++) {
        // channel-last: [row, col, {real_sq, imag_sq}]
        const base = ((i * s + step) * lowLen + p) * 2;
        xs[base] = img[p] * scale;
        xs[base + 1] = img[lowLen + p] * scale;
      }
    }
    for (let p = 0; p < highLen; p++) {
      ys[(i * highLen + p) * 2] = ep.target[p] * scale;
      ys[(i * highLen + p) * 2 + 1] = ep.target[highLen + p] * scale;
    }
  });
  return {
    inputs: tf.tensor5d(xs, [n, s, header.m_v, header.m_h, 2]),
    targets: tf.tensor4d(ys, [n, header.M_v, header.M_h, 2]),
  };
}

/** Bilinear upsampling of the newest input pair on the subsample lattice
 * (low pixel a maps to high pixel factor*a, edges clamp), matching the
 * simulator's analytic baseline. */
export function bilinearBaseline(episode: Episode, header: Header): Float64Array {
  const lowRows = header.m_v;
  const lowCols = header.m_h;
  const highRows = header.M_v;
  const highCols = header.M_h;
  const lowLen = lowRows * lowCols;
  const highLen = highRows * highCols;
  const newest = episode.inputs[episode.inputs.length - 1];
  const out = new Float64Array(2 * highLen);
  const rowFactor = highRows / lowRows;
  const colFactor = highCols / lowCols;
  for (let plane = 0; plane < 2; plane++) {
    for (let r = 0; r < highRows; r++) {
      const x = r / rowFactor;
      const x0 = Math.min(Math.floor(x), lowRows - 1);
      const x1 = Math.min(x0 + 1, lowRows - 1);
      const tx = x - Math.floor(x);
      for (let c = 0; c < highCols; c++) {
        const y = c / colFactor;
        const y0 = Math.min(Math.floor(y), lowCols - 1);
        const y1 = Math.min(y0 + 1, lowCols - 1);
        const ty = y - Math.floor(y);
        const v00 = newest[plane * lowLen + x0 * lowCols + y0];
        const v01 = newest[plane * lowLen + x0 * lowCols + y1];
        const v10 = newest[plane * lowLen + x1 * lowCols + y0];
        const v11 = newest[plane * lowLen + x1 * lowCols + y1];
        const top = (1 - ty) * v00 + ty * v01;
        const bottom = (1 - ty) * v10 + ty * v11;
        out[plane * highLen + r * highCols + c] = Math.max((1 - tx) * top + tx * bottom, 0);
      }
    }
  }
  return out;
}

/** Sum of squared pixel errors against the target, averaged over episodes. */
export function rawMse(
  predictions: Float64Array[],
  episodes: Episode[],
  indices: number[],
): number {
  let total = 0;
  indices.forEach((epIdx, i) => {
    const target = episodes[epIdx].target;
    const pred = predictions[i];
    let sum = 0;
    for (let p = 0; p < target.length; p++) {
      const d = pred[p] - target[p];
      sum += d * d;
    }
    total += sum;
  });
  return total / indices.length;
}
