/**
 * Intensity predictor network and its on-disk artifact.
 *
 * A small U-Net maps per-cell channels of a range raster to echo
 * intensity. Continuous inputs (albedo RGB + scaled depth) concatenate
 * with learned embeddings of the discrete semantic and weather ids; the
 * embeddings are 1x1 convolutions without bias over one-hot planes, which
 * is an embedding lookup in convolution form and keeps the whole model
 * serializable with stock layers.
 */

import { mkdirSync, readFileSync, writeFileSync } from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

export const MODEL_FORMAT_VERSION = 1;

/** Channel names the predictor consumes from simulator rasters. */
export const INPUT_CHANNELS = ['albedo_r', 'albedo_g', 'albedo_b', 'depth',
                               'semantic_id', 'weather_id'] as const;
export const TARGET_CHANNEL = 'intensity';
export const MASK_CHANNELS = ['rgb_valid', 'drop_mask'] as const;

export interface PredictorConfig {
  height: number;
  width: number;
  useWeather: boolean;
  embeddingDim: number;
  baseFilters: number;
  numSemanticClasses: number;
  numWeatherClasses: number;
  /** Depth is divided by this before entering the network. */
  depthScale: number;
  learningRate: number;
  weightDecay: number;
  epochs: number;
  batchSize: number;
  valFraction: number;
  seed: number;
  /** Target standardization, fit on the training split and stored with
      the model; predictions are denormalized on the way out. */
  targetMean: number;
  targetStd: number;
}

export const DEFAULT_CONFIG: PredictorConfig = {
  height: 64,
  width: 160,
  useWeather: true,
  embeddingDim: 8,
  baseFilters: 8,
  numSemanticClasses: 4,
  numWeatherClasses: 4,
  depthScale: 75.0,
  learningRate: 0.01,
  weightDecay: 0.01,
  epochs: 10,
  batchSize: 8,
  valFraction: 0.2,
  seed: 0,
  targetMean: 0.0,
  targetStd: 1.0,
};

export function resolveConfig(partial: Partial<PredictorConfig>): PredictorConfig {
  const config = { ...DEFAULT_CONFIG, ...partial };
  if (config.height < 4 || config.width < 4) {
    throw new Error(`raster size ${config.height}x${config.width} is too small`);
  }
  if (config.learningRate <= 0) {
    throw new Error('learningRate must be > 0');
  }
  return config;
}

/** Network spatial dims: rasters pad up to the pooling granularity. */
export function paddedSize(config: PredictorConfig): { height: number; width: number } {
  const up = (n: number) => Math.ceil(n / 4) * 4;
  return { height: up(config.height), width: up(config.width) };
}

export function buildModel(config: PredictorConfig): tf.LayersModel {
  const { height, width } = paddedSize(config);
  let seedCounter = config.seed * 1000 + 1;
  const init = () => tf.initializers.glorotUniform({ seed: seedCounter++ });

  const conv = (x: tf.SymbolicTensor, filters: number, kernel: number,
                activation: 'relu' | 'linear', name: string,
                useBias = true): tf.SymbolicTensor =>
    tf.layers.conv2d({
      filters, kernelSize: kernel, padding: 'same', activation,
      kernelInitializer: init(), useBias, name,
    }).apply(x) as tf.SymbolicTensor;

  const continuous = tf.input({ shape: [height, width, 4], name: 'continuous' });
  const semanticOneHot = tf.input({
    shape: [height, width, config.numSemanticClasses], name: 'semantic_onehot' });
  const inputs: tf.SymbolicTensor[] = [continuous, semanticOneHot];

  const semEmb = conv(semanticOneHot, config.embeddingDim, 1, 'linear',
                      'semantic_embedding', false);
  const parts: tf.SymbolicTensor[] = [continuous, semEmb];

  if (config.useWeather) {
    const weatherOneHot = tf.input({
      shape: [height, width, config.numWeatherClasses], name: 'weather_onehot' });
    inputs.push(weatherOneHot);
    parts.push(conv(weatherOneHot, config.embeddingDim, 1, 'linear',
                    'weather_embedding', false));
  }

  const x0 = tf.layers.concatenate({ name: 'stem' }).apply(parts) as tf.SymbolicTensor;

  const base = config.baseFilters;
  const e1 = conv(x0, base, 3, 'relu', 'enc1');
  const p1 = tf.layers.maxPooling2d({ poolSize: 2, name: 'pool1' })
    .apply(e1) as tf.SymbolicTensor;
  const e2 = conv(p1, base * 2, 3, 'relu', 'enc2');
  const p2 = tf.layers.maxPooling2d({ poolSize: 2, name: 'pool2' })
    .apply(e2) as tf.SymbolicTensor;
  const bottleneck = conv(p2, base * 4, 3, 'relu', 'bottleneck');

  const u2 = tf.layers.upSampling2d({ size: [2, 2], name: 'up2' })
    .apply(bottleneck) as tf.SymbolicTensor;
  const s2 = tf.layers.concatenate({ name: 'skip2' })
    .apply([u2, e2]) as tf.SymbolicTensor;
  const d2 = conv(s2, base * 2, 3, 'relu', 'dec2');
  const u1 = tf.layers.upSampling2d({ size: [2, 2], name: 'up1' })
    .apply(d2) as tf.SymbolicTensor;
  const s1 = tf.layers.concatenate({ name: 'skip1' })
    .apply([u1, e1]) as tf.SymbolicTensor;
  const d1 = conv(s1, base, 3, 'relu', 'dec1');

  const out = conv(d1, 1, 1, 'linear', 'intensity_head');
  return tf.model({ inputs, outputs: out, name: 'intensity_predictor' });
}

function concatBuffers(data: ArrayBuffer | ArrayBuffer[]): ArrayBuffer {
  if (!Array.isArray(data)) {
    return data;
  }
  const total = data.reduce((n, b) => n + b.byteLength, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const buf of data) {
    out.set(new Uint8Array(buf), offset);
    offset += buf.byteLength;
  }
  return out.buffer;
}

export async function saveModel(dir: string, model: tf.LayersModel,
                                config: PredictorConfig): Promise<void> {
  mkdirSync(dir, { recursive: true });
  const artifacts = await new Promise<tf.io.ModelArtifacts>((resolve) => {
    void model.save(tf.io.withSaveHandler(async (a) => {
      resolve(a);
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } };
    }));
  });
  writeFileSync(path.join(dir, 'model.json'), JSON.stringify({
    modelTopology: artifacts.modelTopology,
    weightSpecs: artifacts.weightSpecs,
  }));
  const weightData = concatBuffers(artifacts.weightData as ArrayBuffer | ArrayBuffer[]);
  writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(weightData));
  writeFileSync(path.join(dir, 'predictor-config.json'), JSON.stringify({
    format_version: MODEL_FORMAT_VERSION,
    input_channels: INPUT_CHANNELS,
    target_channel: TARGET_CHANNEL,
    config,
  }, null, 2));
}

export interface LoadedModel {
  model: tf.LayersModel;
  config: PredictorConfig;
}

export async function loadModel(dir: string): Promise<LoadedModel> {
  const meta = JSON.parse(
    readFileSync(path.join(dir, 'predictor-config.json'), 'utf-8'));
  if (meta.format_version !== MODEL_FORMAT_VERSION) {
    throw new Error(`unsupported model format version ${meta.format_version}`);
  }
  const topo = JSON.parse(readFileSync(path.join(dir, 'model.json'), 'utf-8'));
  const weights = readFileSync(path.join(dir, 'weights.bin'));
  const weightData = weights.buffer.slice(
    weights.byteOffset, weights.byteOffset + weights.byteLength);
  const model = await tf.loadLayersModel(tf.io.fromMemory({
    modelTopology: topo.modelTopology,
    weightSpecs: topo.weightSpecs,
    weightData,
  }));
  return { model, config: meta.config as PredictorConfig };
}
