/**
 * Filesystem save/load for tfjs layers models without the node-native
 * package: topology and weight specs go to model.json, raw weights to
 * weights.bin.  The weight hash identifies a trained model in export
 * metadata.
 */

import * as tf from '@tensorflow/tfjs'
import * as crypto from 'node:crypto'
import * as fs from 'node:fs'
import * as path from 'node:path'

export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true })
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = artifacts.weightData as ArrayBuffer
      fs.writeFileSync(
        path.join(dir, 'model.json'),
        JSON.stringify(
          { modelTopology: artifacts.modelTopology, weightSpecs: artifacts.weightSpecs },
          null,
          2,
        ),
      )
      fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(weightData))
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } }
    }),
  )
}

export async function loadModel(dir: string): Promise<tf.LayersModel> {
  const meta = JSON.parse(fs.readFileSync(path.join(dir, 'model.json'), 'utf-8'))
  const weights = fs.readFileSync(path.join(dir, 'weights.bin'))
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: meta.modelTopology,
      weightSpecs: meta.weightSpecs,
      weightData: weights.buffer.slice(weights.byteOffset, weights.byteOffset + weights.byteLength),
    }),
  )
}

export function modelHash(dir: string): string {
  const weights = fs.readFileSync(path.join(dir, 'weights.bin'))
  return crypto.createHash('sha256').update(weights).digest('hex')
}
