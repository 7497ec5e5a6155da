export { Grid, makeGrid, readPgm, writePgm, readEmap, writeEmap } from './raster'
export {
  downsampleNearest,
  upsampleNearest,
  upsampleBicubic,
  residual,
  meanOf,
  binarizeAbove,
  pearson,
  rocAuc,
} from './ops'
export { buildTrainingPairs, buildImagePair, saveDataset, loadDataset, listImages } from './data'
export type { Dataset, DatasetManifest, Sample, Task, ImagePair } from './data'
export { buildUnet } from './model'
export { trainEstimator, predictPixels, assertFiniteLoss } from './train'
export type { Hyperparams, TrainResult } from './train'
export { exportErrorMaps, estimateErrorMap } from './exporter'
export { saveModel, loadModel, modelHash } from './modelio'
export { initBackend } from './backend'
export { emTile, rng32 } from './synth'
