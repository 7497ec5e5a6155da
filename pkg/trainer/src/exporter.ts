/**
 * Full-image inference and EMAP export.  Each input image gets one
 * `<name>.emap` probability map; a `metadata.json` sidecar records the
 * dataset threshold, scan rate, task, and a hash of the model weights.
 */

import * as tf from '@tensorflow/tfjs'
import * as fs from 'node:fs'
import * as path from 'node:path'

import { initBackend } from './backend'
import { ImagePair, Task } from './data'
import { Grid } from './raster'
import { writeEmap } from './raster'

export interface ExportMetadata {
  epsilon: number
  rate: number
  task: Task
  model_hash: string
}

export async function estimateErrorMap(model: tf.LayersModel, pair: ImagePair): Promise<Grid> {
  await initBackend()
  const x = tf.tensor4d(pair.input, [1, pair.height, pair.width, 2])
  const pred = model.predict(x) as tf.Tensor
  const raw = new Float32Array(await pred.data())
  x.dispose()
  pred.dispose()
  // sigmoid output; clamp against float rounding at the boundaries
  for (let i = 0; i < raw.length; i++) raw[i] = Math.min(Math.max(raw[i], 0), 1)
  return { width: pair.width, height: pair.height, data: raw }
}

export async function exportErrorMaps(
  model: tf.LayersModel,
  pairs: ImagePair[],
  outDir: string,
  metadata: ExportMetadata,
): Promise<string[]> {
  fs.mkdirSync(outDir, { recursive: true })
  const written: string[] = []
  for (const pair of pairs) {
    const map = await estimateErrorMap(model, pair)
    const target = path.join(outDir, `${pair.name}.emap`)
    writeEmap(map, target)
    written.push(target)
  }
  fs.writeFileSync(path.join(outDir, 'metadata.json'), JSON.stringify(metadata, null, 2) + '\n')
  return written
}
