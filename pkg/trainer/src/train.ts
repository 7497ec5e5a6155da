/**
 * Estimator training: pixel-wise binary cross-entropy on the binarized
 * residual targets, with the held-out correlation against the continuous
 * ground-truth error reported after fitting.
 */

import * as tf from '@tensorflow/tfjs'

import { initBackend } from './backend'
import { Dataset, Sample } from './data'
import { buildUnet } from './model'
import { pearson } from './ops'

export interface Hyperparams {
  epochs: number
  batchSize: number
  learningRate: number
  baseChannels: number
}

export interface TrainResult {
  model: tf.LayersModel
  /** pixel-wise Pearson correlation on the held-out split, NaN if no split */
  valCorrelation: number
  finalLoss: number
}

/** Abort guard: training must stop the moment the loss stops being a number. */
export function assertFiniteLoss(loss: number, epoch: number): void {
  if (!Number.isFinite(loss)) {
    throw new Error(`training diverged: loss became non-finite at epoch ${epoch}`)
  }
}

function toTensors(samples: Sample[], patch: number): { x: tf.Tensor4D; y: tf.Tensor4D } {
  const n = samples.length
  const x = new Float32Array(n * patch * patch * 2)
  const y = new Float32Array(n * patch * patch)
  samples.forEach((s, i) => {
    x.set(s.input, i * patch * patch * 2)
    y.set(s.target, i * patch * patch)
  })
  return {
    x: tf.tensor4d(x, [n, patch, patch, 2]),
    y: tf.tensor4d(y, [n, patch, patch, 1]),
  }
}

export async function predictPixels(
  model: tf.LayersModel,
  samples: Sample[],
  patch: number,
): Promise<Float32Array> {
  const out = new Float32Array(samples.length * patch * patch)
  const batch = 32
  for (let start = 0; start < samples.length; start += batch) {
    const slice = samples.slice(start, start + batch)
    const { x } = toTensors(slice, patch)
    const pred = model.predict(x) as tf.Tensor
    out.set(new Float32Array(await pred.data()), start * patch * patch)
    x.dispose()
    pred.dispose()
  }
  return out
}

export async function trainEstimator(
  ds: Dataset,
  hyper: Hyperparams,
  options: { verbose?: boolean } = {},
): Promise<TrainResult> {
  await initBackend()
  if (ds.samples.length === 0) throw new Error('cannot train on an empty dataset')
  const patch = ds.manifest.patch
  const trainSamples = ds.samples.slice(0, ds.manifest.trainCount)
  const valSamples = ds.samples.slice(ds.manifest.trainCount)

  const model = buildUnet(hyper.baseChannels)
  model.compile({
    optimizer: tf.train.adam(hyper.learningRate),
    loss: 'binaryCrossentropy',
  })

  const { x, y } = toTensors(trainSamples, patch)
  let finalLoss = NaN
  try {
    const history = await model.fit(x, y, {
      epochs: hyper.epochs,
      batchSize: hyper.batchSize,
      shuffle: true,
      verbose: 0,
      callbacks: {
        onEpochEnd: async (epoch, logs) => {
          const loss = logs?.loss as number
          assertFiniteLoss(loss, epoch)
          if (options.verbose) console.error(`epoch ${epoch + 1}/${hyper.epochs} loss=${loss.toFixed(5)}`)
        },
      },
    })
    const losses = history.history.loss as number[]
    finalLoss = losses[losses.length - 1]
  } finally {
    x.dispose()
    y.dispose()
  }

  let valCorrelation = NaN
  if (valSamples.length > 0) {
    const predictions = await predictPixels(model, valSamples, patch)
    const truth = new Float32Array(valSamples.length * patch * patch)
    valSamples.forEach((s, i) => truth.set(s.residual, i * patch * patch))
    try {
      valCorrelation = pearson(predictions, truth)
    } catch {
      // constant residuals (degenerate data) leave the correlation undefined
    }
    if (options.verbose) console.error(`held-out pixel correlation: ${valCorrelation.toFixed(4)}`)
  }
  return { model, valCorrelation, finalLoss }
}
