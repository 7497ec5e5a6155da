/**
 * Raster operations mirroring the acquisition simulator's conventions:
 * top-left anchored decimation, block-replication nearest upsampling, and
 * Catmull-Rom (a = -0.5) bicubic upsampling with clamp-to-edge borders.
 */

import { Grid, makeGrid } from './raster'

export function downsampleNearest(g: Grid, rate: number): Grid {
  if (rate < 1) throw new Error(`downsample rate must be >= 1, got ${rate}`)
  const w = Math.ceil(g.width / rate)
  const h = Math.ceil(g.height / rate)
  const out = makeGrid(w, h)
  for (let i = 0; i < h; i++) {
    const si = Math.min(i * rate, g.height - 1)
    for (let j = 0; j < w; j++) {
      const sj = Math.min(j * rate, g.width - 1)
      out.data[i * w + j] = g.data[si * g.width + sj]
    }
  }
  return out
}

export function upsampleNearest(g: Grid, rate: number): Grid {
  const out = makeGrid(g.width * rate, g.height * rate)
  for (let i = 0; i < out.height; i++) {
    const si = Math.floor(i / rate)
    for (let j = 0; j < out.width; j++) {
      out.data[i * out.width + j] = g.data[si * g.width + Math.floor(j / rate)]
    }
  }
  return out
}

const CATMULL_ROM_A = -0.5

function cubicWeights(t: number): [number, number, number, number] {
  const a = CATMULL_ROM_A
  const w = (x: number) =>
    x <= 1 ? (a + 2) * x ** 3 - (a + 3) * x ** 2 + 1 : a * x ** 3 - 5 * a * x ** 2 + 8 * a * x - 4 * a
  return [w(t + 1), w(t), w(1 - t), w(2 - t)]
}

export function upsampleBicubic(g: Grid, rate: number): Grid {
  if (rate < 1) throw new Error(`upsample rate must be >= 1, got ${rate}`)
  // precompute per-axis taps; they repeat with period `rate`
  const axisTaps = (n: number) => {
    const taps: { idx: [number, number, number, number]; w: [number, number, number, number] }[] = []
    for (let o = 0; o < n * rate; o++) {
      const pos = o / rate
      const base = Math.floor(pos)
      const clamp = (v: number) => (v < 0 ? 0 : v > n - 1 ? n - 1 : v)
      taps.push({
        idx: [clamp(base - 1), clamp(base), clamp(base + 1), clamp(base + 2)],
        w: cubicWeights(pos - base),
      })
    }
    return taps
  }
  const rows = axisTaps(g.height)
  const cols = axisTaps(g.width)

  // rows first, then columns
  const mid = makeGrid(g.width, g.height * rate)
  for (let i = 0; i < mid.height; i++) {
    const { idx, w } = rows[i]
    for (let j = 0; j < g.width; j++) {
      mid.data[i * g.width + j] =
        w[0] * g.data[idx[0] * g.width + j] +
        w[1] * g.data[idx[1] * g.width + j] +
        w[2] * g.data[idx[2] * g.width + j] +
        w[3] * g.data[idx[3] * g.width + j]
    }
  }
  const out = makeGrid(g.width * rate, g.height * rate)
  for (let i = 0; i < out.height; i++) {
    for (let j = 0; j < out.width; j++) {
      const { idx, w } = cols[j]
      const row = i * g.width
      const v =
        w[0] * mid.data[row + idx[0]] +
        w[1] * mid.data[row + idx[1]] +
        w[2] * mid.data[row + idx[2]] +
        w[3] * mid.data[row + idx[3]]
      out.data[i * out.width + j] = v < 0 ? 0 : v > 1 ? 1 : v
    }
  }
  return out
}

export function residual(a: Grid, b: Grid): Grid {
  if (a.width !== b.width || a.height !== b.height) {
    throw new Error(`residual inputs disagree on dimensions: ${a.width}x${a.height} vs ${b.width}x${b.height}`)
  }
  const out = makeGrid(a.width, a.height)
  for (let i = 0; i < out.data.length; i++) out.data[i] = Math.abs(a.data[i] - b.data[i])
  return out
}

export function meanOf(g: Grid): number {
  let sum = 0
  for (let i = 0; i < g.data.length; i++) sum += g.data[i]
  return sum / g.data.length
}

/** Strictly-greater-than binarization into a {0, 1} grid. */
export function binarizeAbove(g: Grid, epsilon: number): Grid {
  const out = makeGrid(g.width, g.height)
  for (let i = 0; i < g.data.length; i++) out.data[i] = g.data[i] > epsilon ? 1 : 0
  return out
}

export function pearson(x: ArrayLike<number>, y: ArrayLike<number>): number {
  const n = x.length
  if (n !== y.length) throw new Error('correlation inputs differ in length')
  let mx = 0
  let my = 0
  for (let i = 0; i < n; i++) {
    mx += x[i]
    my += y[i]
  }
  mx /= n
  my /= n
  let sxy = 0
  let sxx = 0
  let syy = 0
  for (let i = 0; i < n; i++) {
    const dx = x[i] - mx
    const dy = y[i] - my
    sxy += dx * dy
    sxx += dx * dx
    syy += dy * dy
  }
  if (sxx === 0 || syy === 0) throw new Error('correlation undefined: zero variance')
  return sxy / Math.sqrt(sxx * syy)
}

/** Area under the ROC curve of scores against binary labels (rank statistic). */
export function rocAuc(scores: ArrayLike<number>, labels: ArrayLike<number>): number {
  const order = Array.from({ length: scores.length }, (_, i) => i).sort((a, b) => scores[a] - scores[b])
  let rankSumPositive = 0
  let positives = 0
  let i = 0
  let rank = 1
  while (i < order.length) {
    // average ranks across ties
    let j = i
    while (j + 1 < order.length && scores[order[j + 1]] === scores[order[i]]) j++
    const avgRank = (rank + rank + (j - i)) / 2
    for (let k = i; k <= j; k++) {
      if (labels[order[k]] === 1) {
        rankSumPositive += avgRank
        positives++
      }
    }
    rank += j - i + 1
    i = j + 1
  }
  const negatives = scores.length - positives
  if (positives === 0 || negatives === 0) throw new Error('AUC undefined: one class is empty')
  return (rankSumPositive - (positives * (positives + 1)) / 2) / (positives * negatives)
}
