/**
 * Deterministic synthetic EM-style tiles for tests and demos: smooth
 * texture, dark membrane-like random walks, and round organelle blobs.
 */

import { Grid, makeGrid } from './raster'

/** mulberry32: small deterministic PRNG, plenty for synthetic data. */
export function rng32(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a = (a + 0x6d2b79f5) | 0
    let t = Math.imul(a ^ (a >>> 15), 1 | a)
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

function gaussianPair(rand: () => number): [number, number] {
  const u = Math.max(rand(), 1e-12)
  const v = rand()
  const r = Math.sqrt(-2 * Math.log(u))
  return [r * Math.cos(2 * Math.PI * v), r * Math.sin(2 * Math.PI * v)]
}

function boxBlur(g: Grid, radius: number): Grid {
  const out = makeGrid(g.width, g.height)
  const tmp = makeGrid(g.width, g.height)
  const span = 2 * radius + 1
  for (let i = 0; i < g.height; i++) {
    for (let j = 0; j < g.width; j++) {
      let sum = 0
      for (let d = -radius; d <= radius; d++) {
        const jj = Math.min(Math.max(j + d, 0), g.width - 1)
        sum += g.data[i * g.width + jj]
      }
      tmp.data[i * g.width + j] = sum / span
    }
  }
  for (let i = 0; i < g.height; i++) {
    for (let j = 0; j < g.width; j++) {
      let sum = 0
      for (let d = -radius; d <= radius; d++) {
        const ii = Math.min(Math.max(i + d, 0), g.height - 1)
        sum += tmp.data[ii * g.width + j]
      }
      out.data[i * g.width + j] = sum / span
    }
  }
  return out
}

export function emTile(seed: number, size: number): Grid {
  const rand = rng32(seed * 2654435761 + 97)
  let noise = makeGrid(size, size)
  for (let i = 0; i < noise.data.length; i++) noise.data[i] = rand()
  noise = boxBlur(boxBlur(noise, 2), 2)
  let lo = Infinity
  let hi = -Infinity
  for (const v of noise.data) {
    lo = Math.min(lo, v)
    hi = Math.max(hi, v)
  }
  const tile = makeGrid(size, size)
  for (let i = 0; i < tile.data.length; i++) {
    tile.data[i] = 0.35 + 0.4 * ((noise.data[i] - lo) / (hi - lo + 1e-12))
  }

  // membrane-like random walks, widened by one pixel
  const walls = new Uint8Array(size * size)
  const walks = Math.max(3, Math.floor(size / 12))
  for (let w = 0; w < walks; w++) {
    let fi = rand() * size
    let fj = rand() * size
    let [di, dj] = gaussianPair(rand)
    for (let step = 0; step < size * 3; step++) {
      const pi = ((Math.floor(fi) % size) + size) % size
      const pj = ((Math.floor(fj) % size) + size) % size
      walls[pi * size + pj] = 1
      const [gi, gj] = gaussianPair(rand)
      di += 0.4 * gi
      dj += 0.4 * gj
      const norm = Math.hypot(di, dj) + 1e-9
      di /= norm
      dj /= norm
      fi += di
      fj += dj
    }
  }
  const wide = new Uint8Array(size * size)
  for (let i = 0; i < size; i++) {
    for (let j = 0; j < size; j++) {
      if (!walls[i * size + j]) continue
      for (let di = -1; di <= 1; di++) {
        for (let dj = -1; dj <= 1; dj++) {
          const ii = Math.min(Math.max(i + di, 0), size - 1)
          const jj = Math.min(Math.max(j + dj, 0), size - 1)
          wide[ii * size + jj] = 1
        }
      }
    }
  }
  for (let i = 0; i < tile.data.length; i++) {
    if (wide[i]) tile.data[i] = 0.06 + 0.06 * (tile.data[i] - 0.35) / 0.4
  }

  // a few bright round blobs
  const blobs = Math.floor(size / 16)
  for (let b = 0; b < blobs; b++) {
    const ci = rand() * size
    const cj = rand() * size
    const radius = 2 + rand() * (size / 12 - 2)
    for (let i = 0; i < size; i++) {
      for (let j = 0; j < size; j++) {
        if ((i - ci) ** 2 + (j - cj) ** 2 < radius ** 2) {
          tile.data[i * size + j] = 0.75 + 0.2 * (tile.data[i * size + j] - 0.35) / 0.4
        }
      }
    }
  }
  for (let i = 0; i < tile.data.length; i++) {
    tile.data[i] = Math.min(Math.max(tile.data[i], 0), 1)
  }
  return tile
}
