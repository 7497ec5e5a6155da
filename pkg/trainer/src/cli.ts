#!/usr/bin/env node
/**
 * estimator-trainer CLI.
 *
 *   prepare --hr-dir <dir> --rate <n> --task no-roi|roi [--roi-dir <dir>]
 *           [--patch <n>] [--val-fraction <f>] --out <dataset-dir>
 *   train   --dataset <dir> --out <model-dir> [--epochs --batch-size
 *           --learning-rate --base-channels] [--verbose]
 *   export  --model <model-dir> --dataset <dataset-dir> --hr-dir <dir>
 *           [--roi-dir <dir>] [--val-only] --out-dir <dir>
 *
 * Hyperparameter defaults live in training.config.json next to the package
 * root; flags override them.
 */

import * as fs from 'node:fs'
import * as path from 'node:path'

import { buildImagePair, buildTrainingPairs, listImages, loadDataset, saveDataset, Task } from './data'
import { exportErrorMaps } from './exporter'
import { loadModel, modelHash, saveModel } from './modelio'
import { Hyperparams, trainEstimator } from './train'

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>()
  for (let i = 0; i < argv.length; i++) {
    if (!argv[i].startsWith('--')) throw new UsageError(`unexpected argument ${argv[i]}`)
    const key = argv[i].slice(2)
    if (key === 'verbose' || key === 'val-only') {
      flags.set(key, 'true')
      continue
    }
    if (i + 1 >= argv.length) throw new UsageError(`flag --${key} needs a value`)
    flags.set(key, argv[++i])
  }
  return flags
}

class UsageError extends Error {}

function need(flags: Map<string, string>, key: string): string {
  const value = flags.get(key)
  if (value === undefined) throw new UsageError(`missing required flag --${key}`)
  return value
}

function loadDefaultHyper(): Hyperparams {
  const configPath = path.join(__dirname, '..', 'training.config.json')
  return JSON.parse(fs.readFileSync(configPath, 'utf-8'))
}

async function cmdPrepare(flags: Map<string, string>): Promise<void> {
  const task = need(flags, 'task') as Task
  if (task !== 'no-roi' && task !== 'roi') throw new UsageError(`bad task ${task}`)
  const ds = buildTrainingPairs(need(flags, 'hr-dir'), parseInt(need(flags, 'rate'), 10), task, {
    roiDir: flags.get('roi-dir'),
    patch: flags.has('patch') ? parseInt(flags.get('patch')!, 10) : undefined,
    valFraction: flags.has('val-fraction') ? parseFloat(flags.get('val-fraction')!) : undefined,
  })
  saveDataset(ds, need(flags, 'out'))
  console.log(
    `prepared ${ds.manifest.count} samples (${ds.manifest.trainCount} train) ` +
      `from ${ds.manifest.imageNames.length} images, epsilon=${ds.manifest.epsilon}`,
  )
}

async function cmdTrain(flags: Map<string, string>): Promise<void> {
  const ds = loadDataset(need(flags, 'dataset'))
  const defaults = loadDefaultHyper()
  const hyper: Hyperparams = {
    epochs: flags.has('epochs') ? parseInt(flags.get('epochs')!, 10) : defaults.epochs,
    batchSize: flags.has('batch-size') ? parseInt(flags.get('batch-size')!, 10) : defaults.batchSize,
    learningRate: flags.has('learning-rate')
      ? parseFloat(flags.get('learning-rate')!)
      : defaults.learningRate,
    baseChannels: flags.has('base-channels')
      ? parseInt(flags.get('base-channels')!, 10)
      : defaults.baseChannels,
  }
  const result = await trainEstimator(ds, hyper, { verbose: flags.has('verbose') })
  await saveModel(result.model, need(flags, 'out'))
  console.log(
    `trained: final loss ${result.finalLoss.toFixed(5)}, ` +
      `held-out pixel correlation ${result.valCorrelation.toFixed(4)}`,
  )
}

async function cmdExport(flags: Map<string, string>): Promise<void> {
  const modelDir = need(flags, 'model')
  const dataset = loadDataset(need(flags, 'dataset'))
  const model = await loadModel(modelDir)
  let paths = listImages(need(flags, 'hr-dir'))
  if (flags.has('val-only')) {
    const valNames = new Set(dataset.manifest.imageNames.slice(dataset.manifest.trainImages))
    paths = paths.filter((p) => valNames.has(path.basename(p).replace(/\.[^.]+$/, '')))
  }
  const pairs = paths.map((p) =>
    buildImagePair(p, dataset.manifest.rate, dataset.manifest.task, flags.get('roi-dir')),
  )
  const written = await exportErrorMaps(model, pairs, need(flags, 'out-dir'), {
    epsilon: dataset.manifest.epsilon,
    rate: dataset.manifest.rate,
    task: dataset.manifest.task,
    model_hash: modelHash(modelDir),
  })
  console.log(`exported ${written.length} error maps to ${need(flags, 'out-dir')}`)
}

export async function main(argv: string[]): Promise<number> {
  const [verb, ...rest] = argv
  try {
    const flags = parseFlags(rest)
    if (verb === 'prepare') await cmdPrepare(flags)
    else if (verb === 'train') await cmdTrain(flags)
    else if (verb === 'export') await cmdExport(flags)
    else throw new UsageError(`unknown verb ${verb ?? '(none)'}; expected prepare | train | export`)
    return 0
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`usage error: ${err.message}`)
      return 1
    }
    console.error(`error: ${err instanceof Error ? err.message : err}`)
    return 2
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => process.exit(code))
}
