/**
 * Training pair construction.
 *
 * Task without ROI: inputs are the reconstruction stacked with the
 * nearest-upsampled low-resolution scan (channel-last); the target is the
 * reconstruction residual |hr - sr| binarized at the dataset-level mean of
 * the training-split residuals.
 *
 * Task with ROI: inputs are the ROI map of the reconstruction stacked with
 * the reconstruction itself; the residual is taken between the two ROI maps.
 *
 * Images are cut into non-overlapping square patches; the validation split
 * holds out whole images (the last `valFraction` of the sorted file list).
 */

import * as fs from 'node:fs'
import * as path from 'node:path'

import { Grid, makeGrid, readEmap, readPgm } from './raster'
import { binarizeAbove, downsampleNearest, residual, upsampleBicubic, upsampleNearest } from './ops'

export type Task = 'no-roi' | 'roi'

export interface DatasetManifest {
  task: Task
  rate: number
  patch: number
  /** dataset-level binarization threshold: mean training-split residual */
  epsilon: number
  imageNames: string[]
  trainImages: number
  samplesPerImage: number
  count: number
  trainCount: number
}

export interface Sample {
  /** channel-last [patch, patch, 2] */
  input: Float32Array
  /** binary {0,1} target, [patch, patch] */
  target: Float32Array
  /** continuous ground-truth residual, [patch, patch] */
  residual: Float32Array
}

export interface Dataset {
  manifest: DatasetManifest
  samples: Sample[]
}

export interface ImagePair {
  name: string
  /** stacked model input for the full image, channel-last [h, w, 2] */
  input: Float32Array
  width: number
  height: number
  residual: Grid
}

function stackChannels(a: Grid, b: Grid): Float32Array {
  const out = new Float32Array(a.data.length * 2)
  for (let i = 0; i < a.data.length; i++) {
    out[2 * i] = a.data[i]
    out[2 * i + 1] = b.data[i]
  }
  return out
}

/** Simulate the initial scan and build the full-image model input. */
export function buildImagePair(hrPath: string, rate: number, task: Task, roiDir?: string): ImagePair {
  const name = path.basename(hrPath).replace(/\.[^.]+$/, '')
  const hr = readPgm(hrPath)
  const lr = downsampleNearest(hr, rate)
  const sr = upsampleBicubic(lr, rate)
  if (task === 'no-roi') {
    return {
      name,
      input: stackChannels(sr, upsampleNearest(lr, rate)),
      width: hr.width,
      height: hr.height,
      residual: residual(hr, sr),
    }
  }
  if (!roiDir) throw new Error('roi task needs --roi-dir with <name>.hr.emap and <name>.sr.emap files')
  const roiHrPath = path.join(roiDir, `${name}.hr.emap`)
  const roiSrPath = path.join(roiDir, `${name}.sr.emap`)
  if (!fs.existsSync(roiHrPath) || !fs.existsSync(roiSrPath)) {
    throw new Error(`missing ROI maps for ${name}: expected ${roiHrPath} and ${roiSrPath}`)
  }
  const roiHr = readEmap(roiHrPath)
  const roiSr = readEmap(roiSrPath)
  if (roiHr.width !== hr.width || roiHr.height !== hr.height || roiSr.width !== hr.width) {
    throw new Error(`ROI maps for ${name} do not match the image dimensions`)
  }
  return {
    name,
    input: stackChannels(roiSr, sr),
    width: hr.width,
    height: hr.height,
    residual: residual(roiHr, roiSr),
  }
}

export function listImages(hrDir: string): string[] {
  const entries = fs
    .readdirSync(hrDir)
    .filter((f) => f.endsWith('.pgm'))
    .sort()
  if (entries.length === 0) throw new Error(`no .pgm images found in ${hrDir}`)
  return entries.map((f) => path.join(hrDir, f))
}

export function buildTrainingPairs(
  hrDir: string,
  rate: number,
  task: Task,
  options: { roiDir?: string; patch?: number; valFraction?: number } = {},
): Dataset {
  const patch = options.patch ?? 32
  const valFraction = options.valFraction ?? 0.25
  const paths = listImages(hrDir)
  const pairs = paths.map((p) => buildImagePair(p, rate, task, options.roiDir))

  for (const pair of pairs) {
    if (pair.width % patch !== 0 || pair.height % patch !== 0) {
      throw new Error(
        `image ${pair.name} (${pair.width}x${pair.height}) is not divisible into ${patch}-sided patches`,
      )
    }
  }

  const trainImages = Math.max(1, Math.floor(paths.length * (1 - valFraction)))
  // dataset-level threshold from the training split only
  let residualSum = 0
  let residualCount = 0
  for (let i = 0; i < trainImages; i++) {
    for (const v of pairs[i].residual.data) residualSum += v
    residualCount += pairs[i].residual.data.length
  }
  const epsilon = residualSum / residualCount

  const samples: Sample[] = []
  for (const pair of pairs) {
    const target = binarizeAbove(pair.residual, epsilon)
    const tilesPerRow = pair.width / patch
    const tilesPerCol = pair.height / patch
    for (let ti = 0; ti < tilesPerCol; ti++) {
      for (let tj = 0; tj < tilesPerRow; tj++) {
        const input = new Float32Array(patch * patch * 2)
        const tgt = new Float32Array(patch * patch)
        const res = new Float32Array(patch * patch)
        for (let i = 0; i < patch; i++) {
          const src = (ti * patch + i) * pair.width + tj * patch
          for (let j = 0; j < patch; j++) {
            input[(i * patch + j) * 2] = pair.input[2 * (src + j)]
            input[(i * patch + j) * 2 + 1] = pair.input[2 * (src + j) + 1]
            tgt[i * patch + j] = target.data[src + j]
            res[i * patch + j] = pair.residual.data[src + j]
          }
        }
        samples.push({ input, target: tgt, residual: res })
      }
    }
  }

  const samplesPerImage = (pairs[0].width / patch) * (pairs[0].height / patch)
  return {
    manifest: {
      task,
      rate,
      patch,
      epsilon,
      imageNames: pairs.map((p) => p.name),
      trainImages,
      samplesPerImage,
      count: samples.length,
      trainCount: trainImages * samplesPerImage,
    },
    samples,
  }
}

export function saveDataset(ds: Dataset, dir: string): void {
  fs.mkdirSync(dir, { recursive: true })
  fs.writeFileSync(path.join(dir, 'manifest.json'), JSON.stringify(ds.manifest, null, 2) + '\n')
  const p = ds.manifest.patch
  const record = p * p * 4 // input(2) + target + residual, floats per sample
  const blob = Buffer.alloc(ds.samples.length * record * 4)
  ds.samples.forEach((s, n) => {
    let off = n * record * 4
    for (const arr of [s.input, s.target, s.residual]) {
      for (let i = 0; i < arr.length; i++) {
        blob.writeFloatLE(arr[i], off)
        off += 4
      }
    }
  })
  fs.writeFileSync(path.join(dir, 'samples.bin'), blob)
}

export function loadDataset(dir: string): Dataset {
  const manifest: DatasetManifest = JSON.parse(
    fs.readFileSync(path.join(dir, 'manifest.json'), 'utf-8'),
  )
  const p = manifest.patch
  const record = p * p * 4
  const blob = fs.readFileSync(path.join(dir, 'samples.bin'))
  if (blob.length !== manifest.count * record * 4) {
    throw new Error(`${dir}: samples.bin size does not match the manifest`)
  }
  const samples: Sample[] = []
  for (let n = 0; n < manifest.count; n++) {
    const base = n * record * 4
    const read = (offFloats: number, count: number) => {
      const arr = new Float32Array(count)
      for (let i = 0; i < count; i++) arr[i] = blob.readFloatLE(base + (offFloats + i) * 4)
      return arr
    }
    samples.push({
      input: read(0, p * p * 2),
      target: read(p * p * 2, p * p),
      residual: read(p * p * 3, p * p),
    })
  }
  return { manifest, samples }
}
