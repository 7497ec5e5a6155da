/**
 * tfjs backend setup.  Training runs on the WASM backend, which ships every
 * kernel this model needs except Conv2DBackpropFilter; that one is filled in
 * here as a composite of forward convolutions using the standard identity
 *
 *   dW[kh,kw,ci,co] = conv2d(transpose(pad(x)), transpose(dy), 'valid')
 *
 * which is exact for stride-1, dilation-1 NHWC convolutions (the only kind
 * the estimator topology uses).
 */

import * as tf from '@tensorflow/tfjs'
import * as path from 'node:path'

let ready: Promise<void> | null = null

function registerFilterGradKernel(): void {
  tf.registerKernel({
    kernelName: 'Conv2DBackpropFilter',
    backendName: 'wasm',
    kernelFunc: (args: any) => {
      const { x, dy } = args.inputs
      const { strides, pad, dataFormat, dilations, filterShape } = args.attrs
      const strideH = Array.isArray(strides) ? strides[0] : strides ?? 1
      const strideW = Array.isArray(strides) ? strides[1] : strides ?? 1
      const dilation = Array.isArray(dilations) ? Math.max(...dilations) : dilations ?? 1
      if (strideH !== 1 || strideW !== 1 || dilation !== 1 || (dataFormat && dataFormat !== 'NHWC')) {
        throw new Error('composite Conv2DBackpropFilter supports stride-1 dilation-1 NHWC only')
      }
      const [kh, kw] = filterShape
      const xData = args.backend.readSync(x.dataId)
      const dyData = args.backend.readSync(dy.dataId)
      return tf.tidy(() => {
        const xt = tf.tensor(xData, x.shape, x.dtype)
        const dyt = tf.tensor(dyData, dy.shape, dy.dtype)
        let padded = xt
        if (pad === 'same') {
          const top = Math.floor((kh - 1) / 2)
          const left = Math.floor((kw - 1) / 2)
          padded = tf.pad(xt, [
            [0, 0],
            [top, kh - 1 - top],
            [left, kw - 1 - left],
            [0, 0],
          ])
        } else if (typeof pad === 'number' && pad > 0) {
          padded = tf.pad(xt, [
            [0, 0],
            [pad, pad],
            [pad, pad],
            [0, 0],
          ])
        }
        const xT = tf.transpose(padded, [3, 1, 2, 0]) as tf.Tensor4D
        const dyF = tf.transpose(dyt, [1, 2, 0, 3]) as tf.Tensor4D
        return tf.transpose(tf.conv2d(xT, dyF, 1, 'valid'), [1, 2, 0, 3])
      })
    },
  })
}

/** Initialize tfjs on the WASM backend (falls back to plain cpu). */
export function initBackend(): Promise<void> {
  if (ready) return ready
  ready = (async () => {
    try {
      const wasm = require('@tensorflow/tfjs-backend-wasm')
      wasm.setWasmPaths(
        path.join(path.dirname(require.resolve('@tensorflow/tfjs-backend-wasm')), '') + path.sep,
      )
      registerFilterGradKernel()
      const ok = await tf.setBackend('wasm')
      if (!ok) await tf.setBackend('cpu')
    } catch {
      await tf.setBackend('cpu')
    }
    await tf.ready()
  })()
  return ready
}
