/**
 * Sequence-to-image super-resolution network: windowed low-resolution
 * beam-quality image pairs in, next-frame high-resolution pair out.
 *
 * Two ConvLSTM stages (32 and 16 channels, 3x3 kernels) fuse the temporal
 * window, a convolution fans out to r^2 * 2 channels, and a sub-pixel
 * shuffle rearranges them onto the upscaled lattice; batch normalization
 * between stages, then a flatten + dense head refines the full image.
 */

import * as tf from '@tensorflow/tfjs';

export interface ModelSpec {
  s: number;
  lowRows: number;
  lowCols: number;
  highRows: number;
  highCols: number;
  convLstmFilters?: [number, number];
  kernelSize?: number;
}

class SubPixelShuffle extends tf.layers.Layer {
  static className = 'SubPixelShuffle';
  private readonly blockSize: number;

  constructor(config: { blockSize: number; name?: string }) {
    super(config as Record<string, unknown>);
    this.blockSize = config.blockSize;
  }

  computeOutputShape(inputShape: tf.Shape): tf.Shape {
    const [batch, rows, cols, channels] = inputShape as number[];
    const r = this.blockSize;
    return [batch, rows * r, cols * r, channels / (r * r)];
  }

  call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    // depth-to-space via reshape/transpose: tfjs has no gradient for the
    // fused DepthToSpace kernel
    const x = (Array.isArray(inputs) ? inputs[0] : inputs) as tf.Tensor4D;
    const r = this.blockSize;
    return tf.tidy(() => {
      const [batch, rows, cols, channels] = x.shape;
      const out = channels / (r * r);
      const expanded = tf.reshape(x, [batch, rows, cols, r, r, out]);
      const swapped = tf.transpose(expanded, [0, 1, 3, 2, 4, 5]);
      return tf.reshape(swapped, [batch, rows * r, cols * r, out]);
    });
  }

  getConfig(): tf.serialization.ConfigDict {
    const config = super.getConfig();
    return { ...config, blockSize: this.blockSize };
  }
}

tf.serialization.registerClass(SubPixelShuffle);

export function buildModel(spec: ModelSpec): tf.LayersModel {
  const [f1, f2] = spec.convLstmFilters ?? [32, 16];
  const k = spec.kernelSize ?? 3;
  if (spec.highRows % spec.lowRows !== 0 || spec.highCols % spec.lowCols !== 0) {
    throw new Error('high-resolution grid must be a multiple of the low-resolution grid');
  }
  const upscale = spec.highRows / spec.lowRows;
  if (spec.highCols / spec.lowCols !== upscale) {
    throw new Error('anisotropic upscaling is not supported');
  }

  const input = tf.input({ shape: [spec.s, spec.lowRows, spec.lowCols, 2] });
  let x = tf.layers
    .convLstm2d({
      filters: f1,
      kernelSize: k,
      padding: 'same',
      returnSequences: true,
      activation: 'tanh',
    })
    .apply(input) as tf.SymbolicTensor;
  // rank-5 batch norm is unimplemented in tfjs; normalize each step instead
  x = tf.layers
    .timeDistributed({ layer: tf.layers.batchNormalization({}) })
    .apply(x) as tf.SymbolicTensor;
  x = tf.layers
    .convLstm2d({
      filters: f2,
      kernelSize: k,
      padding: 'same',
      returnSequences: false,
      activation: 'tanh',
    })
    .apply(x) as tf.SymbolicTensor;
  x = tf.layers
    .conv2d({ filters: 2 * upscale * upscale, kernelSize: k, padding: 'same' })
    .apply(x) as tf.SymbolicTensor;
  x = new SubPixelShuffle({ blockSize: upscale }).apply(x) as tf.SymbolicTensor;
  x = tf.layers.batchNormalization({}).apply(x) as tf.SymbolicTensor;
  x = tf.layers.flatten().apply(x) as tf.SymbolicTensor;
  x = tf.layers
    .dense({ units: spec.highRows * spec.highCols * 2 })
    .apply(x) as tf.SymbolicTensor;
  const output = tf.layers
    .reshape({ targetShape: [spec.highRows, spec.highCols, 2] })
    .apply(x) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: output });
}

export function countParams(model: tf.LayersModel): { total: number; trainable: number; frozen: number } {
  const total = model.countParams();
  let trainable = 0;
  for (const w of model.trainableWeights) {
    trainable += (w.shape as Array<number | null>).reduce<number>((a, b) => a * (b ?? 1), 1);
  }
  return { total, trainable, frozen: total - trainable };
}
