/**
 * Training loop: read a dataset, normalize, fit the sequence model with the
 * Adadelta optimizer and MSE loss, and log the raw-scale held-out error per
 * epoch (mean over episodes of the summed squared pixel error, directly
 * comparable with the analytic baselines).
 */

import * as tf from '@tensorflow/tfjs';
import {
  bilinearBaseline,
  episodeTensors,
  normalizationScale,
  rawMse,
  splitEpisodes,
} from './data.js';
import { Episode, Header, readDataset } from './interchange.js';
import { CheckpointMeta } from './io.js';
import { buildModel, countParams } from './model.js';

export interface TrainConfig {
  batchSize: number;
  learningRate: number;
  epochs: number;
  valFraction: number;
  seed: number;
  convLstmFilters?: [number, number];
  verbose?: boolean;
}

export const DEFAULT_TRAIN_CONFIG: TrainConfig = {
  batchSize: 1024,
  learningRate: 1e-3,
  epochs: 50,
  valFraction: 0.2,
  seed: 1,
};

export interface EpochLog {
  epoch: number;
  trainLoss: number; // normalized-scale tfjs loss
  valMse: number; // raw-scale, Eq.-style summed-pixel MSE
}

export interface TrainOutcome {
  model: tf.LayersModel;
  meta: CheckpointMeta;
  history: EpochLog[];
  header: Header;
  episodes: Episode[];
  valIndices: number[];
  bilinearValMse: number;
}

export async function trainOnDataset(datasetPath: string, cfg: TrainConfig): Promise<TrainOutcome> {
  const { header, episodes } = readDataset(datasetPath);
  if (episodes.length < 2) {
    throw new Error(`dataset holds only ${episodes.length} episodes; cannot split`);
  }
  const split = splitEpisodes(episodes.length, cfg.valFraction, cfg.seed);
  const scale = normalizationScale(episodes, split.train);
  const train = episodeTensors(episodes, split.train, header, scale);
  const val = episodeTensors(episodes, split.val, header, scale);

  const model = buildModel({
    s: header.s,
    lowRows: header.m_v,
    lowCols: header.m_h,
    highRows: header.M_v,
    highCols: header.M_h,
    convLstmFilters: cfg.convLstmFilters,
  });
  model.compile({ optimizer: tf.train.adadelta(cfg.learningRate), loss: 'meanSquaredError' });

  const history: EpochLog[] = [];
  const highPixels = header.M_v * header.M_h * 2;
  for (let epoch = 1; epoch <= cfg.epochs; epoch++) {
    const fit = await model.fit(train.inputs, train.targets, {
      epochs: 1,
      batchSize: Math.min(cfg.batchSize, split.train.length),
      shuffle: true,
      verbose: 0,
    });
    const valPred = tf.tidy(() => model.predict(val.inputs) as tf.Tensor4D);
    const predData = await valPred.data();
    valPred.dispose();
    const highLen = header.M_v * header.M_h;
    // tensor layout [row, col, channel] -> interchange layout [plane, row, col]
    const predictions: Float64Array[] = split.val.map((_, i) => {
      const out = new Float64Array(highPixels);
      for (let p = 0; p < highLen; p++) {
        out[p] = predData[(i * highLen + p) * 2] / scale;
        out[highLen + p] = predData[(i * highLen + p) * 2 + 1] / scale;
      }
      return out;
    });
    const valMse = rawMse(predictions, episodes, split.val);
    const trainLoss = Number(fit.history['loss'][0]);
    history.push({ epoch, trainLoss, valMse });
    if (cfg.verbose) {
      console.log(`epoch ${epoch}: train loss ${trainLoss.toExponential(3)}, val mse ${valMse.toExponential(3)}`);
    }
  }
  train.inputs.dispose();
  train.targets.dispose();
  val.inputs.dispose();
  val.targets.dispose();

  const bilinearPreds = split.val.map((epIdx) => bilinearBaseline(episodes[epIdx], header));
  const bilinearValMse = rawMse(bilinearPreds, episodes, split.val);

  const meta: CheckpointMeta = {
    scale,
    s: header.s,
    m_v: header.m_v,
    m_h: header.m_h,
    M_v: header.M_v,
    M_h: header.M_h,
    epochs: cfg.epochs,
    finalValMse: history[history.length - 1]?.valMse ?? Number.NaN,
    totalParams: countParams(model).total,
  };
  return {
    model,
    meta,
    history,
    header,
    episodes,
    valIndices: split.val,
    bilinearValMse,
  };
}

export async function predictEpisodes(
  model: tf.LayersModel,
  meta: CheckpointMeta,
  header: Header,
  episodes: Episode[],
): Promise<Float64Array[]> {
  if (
    header.s !== meta.s ||
    header.m_v !== meta.m_v ||
    header.m_h !== meta.m_h ||
    header.M_v !== meta.M_v ||
    header.M_h !== meta.M_h
  ) {
    throw new Error(
      `dataset geometry (s=${header.s}, low ${header.m_v}x${header.m_h}, high ` +
        `${header.M_v}x${header.M_h}) does not match the checkpoint ` +
        `(s=${meta.s}, low ${meta.m_v}x${meta.m_h}, high ${meta.M_v}x${meta.M_h})`,
    );
  }
  const indices = [...Array(episodes.length).keys()];
  const tensors = episodeTensors(episodes, indices, header, meta.scale);
  const out = tf.tidy(() => model.predict(tensors.inputs) as tf.Tensor4D);
  const data = await out.data();
  out.dispose();
  tensors.inputs.dispose();
  tensors.targets.dispose();
  const highLen = header.M_v * header.M_h;
  return episodes.map((_, i) => {
    const result = new Float64Array(2 * highLen);
    for (let p = 0; p < highLen; p++) {
      result[p] = data[(i * highLen + p) * 2] / meta.scale;
      result[highLen + p] = data[(i * highLen + p) * 2 + 1] / meta.scale;
    }
    return result;
  });
}
