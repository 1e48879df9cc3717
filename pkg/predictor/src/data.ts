/**
 * Training samples from simulator datasets.
 *
 * Every range raster (front or rear sector) is one sample: continuous
 * channels (albedo RGB, scaled depth), discrete id planes (semantic,
 * weather), the physical-model intensity as the target, and a loss mask.
 * The mask keeps cells that have a return with valid albedo, were not
 * dropped by the receiver, and are not spray (spray intensity is noise by
 * construction, so the predictor never trains on it).
 */

import { existsSync, readFileSync } from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

import { channelPlane, readRaster, requireChannels, RangeRaster } from './raster';
import { paddedSize, PredictorConfig } from './model';

const SPRAY_CLASS_ID = 3;

export interface Sample {
  /** (H*W*4) albedo RGB + depth/depthScale, interleaved per cell. */
  continuous: Float32Array;
  semanticIds: Uint8Array;
  weatherIds: Uint8Array;
  target: Float32Array;
  mask: Uint8Array;
  source: string;
}

export interface SampleSet {
  samples: Sample[];
  height: number;
  width: number;
}

/** Raster paths from one dataset directory (a manifest and its frames). */
function rasterPathsFromManifest(dir: string): string[] {
  const manifest = JSON.parse(readFileSync(path.join(dir, 'manifest.json'), 'utf-8'));
  const out: string[] = [];
  for (const frame of manifest.frames) {
    out.push(path.join(dir, frame.rasters.front));
    out.push(path.join(dir, frame.rasters.rear));
  }
  return out;
}

/** Collect raster paths from a dataset dir or a directory of dataset dirs. */
export function collectRasterPaths(root: string): string[] {
  if (existsSync(path.join(root, 'manifest.json'))) {
    return rasterPathsFromManifest(root);
  }
  const { readdirSync, statSync } = require('fs') as typeof import('fs');
  const paths: string[] = [];
  for (const entry of readdirSync(root).sort()) {
    const sub = path.join(root, entry);
    if (statSync(sub).isDirectory() && existsSync(path.join(sub, 'manifest.json'))) {
      paths.push(...rasterPathsFromManifest(sub));
    }
  }
  if (paths.length === 0) {
    throw new Error(`no dataset manifests found under ${root}`);
  }
  return paths;
}

function discreteIds(plane: Float32Array, maxClasses: number,
                     name: string, source: string): Uint8Array {
  const ids = new Uint8Array(plane.length);
  for (let i = 0; i < plane.length; i++) {
    const v = plane[i];
    if (!Number.isInteger(v) || v < 0 || v >= maxClasses) {
      throw new Error(
        `${source}: ${name} cell ${i} holds ${v}, expected an integer id in ` +
        `[0, ${maxClasses})`);
    }
    ids[i] = v;
  }
  return ids;
}

function binaryMask(plane: Float32Array, name: string, source: string): Uint8Array {
  const out = new Uint8Array(plane.length);
  for (let i = 0; i < plane.length; i++) {
    const v = plane[i];
    if (v !== 0.0 && v !== 1.0) {
      throw new Error(`${source}: ${name} cell ${i} holds ${v}, expected 0 or 1`);
    }
    out[i] = v;
  }
  return out;
}

export function sampleFromRaster(raster: RangeRaster, config: PredictorConfig,
                                 source = '<raster>'): Sample {
  requireChannels(raster, ['albedo_r', 'albedo_g', 'albedo_b', 'depth',
                           'semantic_id', 'weather_id', 'drop_mask',
                           'rgb_valid', 'intensity']);
  const { height, width } = raster.header;
  if (height !== config.height || width !== config.width) {
    throw new Error(`${source}: raster is ${height}x${width}, ` +
                    `training config expects ${config.height}x${config.width}`);
  }
  const size = height * width;
  const r = channelPlane(raster, 'albedo_r');
  const g = channelPlane(raster, 'albedo_g');
  const b = channelPlane(raster, 'albedo_b');
  const depth = channelPlane(raster, 'depth');
  const continuous = new Float32Array(size * 4);
  for (let i = 0; i < size; i++) {
    continuous[i * 4] = r[i];
    continuous[i * 4 + 1] = g[i];
    continuous[i * 4 + 2] = b[i];
    continuous[i * 4 + 3] = depth[i] / config.depthScale;
  }
  const semanticIds = discreteIds(channelPlane(raster, 'semantic_id'),
                                  config.numSemanticClasses, 'semantic_id', source);
  const weatherIds = discreteIds(channelPlane(raster, 'weather_id'),
                                 config.numWeatherClasses, 'weather_id', source);
  const rgbValid = binaryMask(channelPlane(raster, 'rgb_valid'), 'rgb_valid', source);
  const dropMask = binaryMask(channelPlane(raster, 'drop_mask'), 'drop_mask', source);
  const mask = new Uint8Array(size);
  for (let i = 0; i < size; i++) {
    mask[i] = rgbValid[i] === 1 && dropMask[i] === 0
      && semanticIds[i] !== SPRAY_CLASS_ID ? 1 : 0;
  }
  const target = Float32Array.from(channelPlane(raster, 'intensity'));
  return { continuous, semanticIds, weatherIds, target, mask, source };
}

export function loadSamples(paths: string[], config: PredictorConfig): SampleSet {
  const samples = paths.map((p) => sampleFromRaster(readRaster(p), config, p));
  return { samples, height: config.height, width: config.width };
}

export interface BatchTensors {
  inputs: tf.Tensor[];
  target: tf.Tensor4D;
  mask: tf.Tensor4D;
}

/** Stack samples into network-shaped tensors (one-hot expanding the ids).

    Rasters whose size is not a multiple of the pooling granularity are
    zero-padded on the bottom/right; padding cells carry id 0 and a zero
    mask, so they never contribute to the loss. */
export function batchToTensors(samples: Sample[], config: PredictorConfig): BatchTensors {
  const { height, width } = config;
  const padded = paddedSize(config);
  const pw = padded.width;
  const psize = padded.height * pw;
  const n = samples.length;
  const cont = new Float32Array(n * psize * 4);
  const sem = new Float32Array(n * psize * config.numSemanticClasses);
  const wea = new Float32Array(n * psize * config.numWeatherClasses);
  const target = new Float32Array(n * psize);
  const mask = new Float32Array(n * psize);
  for (let k = 0; k < n; k++) {
    const s = samples[k];
    for (let row = 0; row < padded.height; row++) {
      for (let col = 0; col < pw; col++) {
        const p = k * psize + row * pw + col;
        const inside = row < height && col < width;
        const i = row * width + col;
        if (inside) {
          cont[p * 4] = s.continuous[i * 4];
          cont[p * 4 + 1] = s.continuous[i * 4 + 1];
          cont[p * 4 + 2] = s.continuous[i * 4 + 2];
          cont[p * 4 + 3] = s.continuous[i * 4 + 3];
          target[p] = s.target[i];
          mask[p] = s.mask[i];
          sem[p * config.numSemanticClasses + s.semanticIds[i]] = 1;
          wea[p * config.numWeatherClasses + s.weatherIds[i]] = 1;
        } else {
          sem[p * config.numSemanticClasses] = 1;
          wea[p * config.numWeatherClasses] = 1;
        }
      }
    }
  }
  const inputs: tf.Tensor[] = [
    tf.tensor4d(cont, [n, padded.height, pw, 4]),
    tf.tensor4d(sem, [n, padded.height, pw, config.numSemanticClasses]),
  ];
  if (config.useWeather) {
    inputs.push(tf.tensor4d(wea, [n, padded.height, pw, config.numWeatherClasses]));
  }
  return {
    inputs,
    target: tf.tensor4d(target, [n, padded.height, pw, 1]),
    mask: tf.tensor4d(mask, [n, padded.height, pw, 1]),
  };
}

export function disposeBatch(batch: BatchTensors): void {
  batch.inputs.forEach((t) => t.dispose());
  batch.target.dispose();
  batch.mask.dispose();
}
