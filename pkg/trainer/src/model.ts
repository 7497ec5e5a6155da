/**
 * Encoder-decoder pixel classifier: two downsampling levels with skip
 * connections, sigmoid head, fully convolutional so it runs on any input
 * whose sides are divisible by 4.  Hidden activations are leaky so a bad
 * initialization cannot kill every gradient path.
 */

import * as tf from '@tensorflow/tfjs'

export function buildUnet(baseChannels = 8): tf.LayersModel {
  const conv = (x: tf.SymbolicTensor, filters: number) => {
    const linear = tf.layers
      .conv2d({ filters, kernelSize: 3, padding: 'same' })
      .apply(x) as tf.SymbolicTensor
    return tf.layers.leakyReLU({ alpha: 0.1 }).apply(linear) as tf.SymbolicTensor
  }

  const input = tf.input({ shape: [null, null, 2] })
  const enc1 = conv(conv(input, baseChannels), baseChannels)
  const down1 = tf.layers.maxPooling2d({ poolSize: 2 }).apply(enc1) as tf.SymbolicTensor
  const enc2 = conv(conv(down1, baseChannels * 2), baseChannels * 2)
  const down2 = tf.layers.maxPooling2d({ poolSize: 2 }).apply(enc2) as tf.SymbolicTensor
  const bridge = conv(down2, baseChannels * 4)
  const up2 = tf.layers.upSampling2d({ size: [2, 2] }).apply(bridge) as tf.SymbolicTensor
  const dec2 = conv(
    tf.layers.concatenate().apply([up2, enc2]) as tf.SymbolicTensor,
    baseChannels * 2,
  )
  const up1 = tf.layers.upSampling2d({ size: [2, 2] }).apply(dec2) as tf.SymbolicTensor
  const dec1 = conv(
    tf.layers.concatenate().apply([up1, enc1]) as tf.SymbolicTensor,
    baseChannels,
  )
  const output = tf.layers
    .conv2d({ filters: 1, kernelSize: 1, activation: 'sigmoid' })
    .apply(dec1) as tf.SymbolicTensor
  return tf.model({ inputs: input, outputs: output })
}
