/**
 * Directory-based model checkpointing. The browser-oriented tfjs build has
 * no file:// handlers, so this provides a minimal pair: model.json with the
 * topology + weight specs, weights.bin with the concatenated weight data,
 * and meta.json with the normalization scale and dataset geometry.
 */

import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

export interface CheckpointMeta {
  scale: number;
  s: number;
  m_v: number;
  m_h: number;
  M_v: number;
  M_h: number;
  epochs: number;
  finalValMse: number;
  totalParams: number;
}

export async function saveModel(model: tf.LayersModel, dir: string, meta: CheckpointMeta): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save({
    save: async (artifacts: tf.io.ModelArtifacts) => {
      fs.writeFileSync(
        path.join(dir, 'model.json'),
        JSON.stringify({
          modelTopology: artifacts.modelTopology,
          weightSpecs: artifacts.weightSpecs,
          format: artifacts.format,
          generatedBy: artifacts.generatedBy,
          convertedBy: null,
        }),
      );
      const data = artifacts.weightData as ArrayBuffer;
      fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(new Uint8Array(data)));
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } };
    },
  });
  fs.writeFileSync(path.join(dir, 'meta.json'), JSON.stringify(meta, null, 2));
}

export async function loadModel(dir: string): Promise<{ model: tf.LayersModel; meta: CheckpointMeta }> {
  const topo = JSON.parse(fs.readFileSync(path.join(dir, 'model.json'), 'utf-8'));
  const weights = fs.readFileSync(path.join(dir, 'weights.bin'));
  const weightData = new Uint8Array(weights).buffer;
  const model = await tf.loadLayersModel({
    load: async () => ({
      modelTopology: topo.modelTopology,
      weightSpecs: topo.weightSpecs,
      weightData,
      format: topo.format,
      generatedBy: topo.generatedBy,
    }),
  });
  const meta = JSON.parse(fs.readFileSync(path.join(dir, 'meta.json'), 'utf-8')) as CheckpointMeta;
  return { model, meta };
}
