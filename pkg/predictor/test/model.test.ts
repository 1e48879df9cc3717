/** Model construction, persistence, and prediction invariants. */

import { mkdtempSync } from 'fs';
import { tmpdir } from 'os';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';
import { beforeAll, describe, expect, it } from 'vitest';

import { initBackend } from '../src/backend';
import { buildModel, loadModel, paddedSize, resolveConfig, saveModel } from '../src/model';

beforeAll(async () => {
  await initBackend();
});

const SMALL = resolveConfig({ height: 16, width: 24, seed: 5 });

describe('buildModel', () => {
  it('maps raster-shaped inputs to one intensity plane', () => {
    const model = buildModel(SMALL);
    const out = model.predict([
      tf.zeros([3, 16, 24, 4]), tf.zeros([3, 16, 24, 4]),
      tf.zeros([3, 16, 24, 4]),
    ]) as tf.Tensor;
    expect(out.shape).toEqual([3, 16, 24, 1]);
  });

  it('drops the weather input when disabled', () => {
    const model = buildModel(resolveConfig({ ...SMALL, useWeather: false }));
    expect(model.inputs.length).toBe(2);
    const out = model.predict([
      tf.zeros([1, 16, 24, 4]), tf.zeros([1, 16, 24, 4]),
    ]) as tf.Tensor;
    expect(out.shape).toEqual([1, 16, 24, 1]);
  });

  it('is reproducible for a fixed seed', () => {
    const a = buildModel(SMALL);
    const b = buildModel(SMALL);
    const x = [tf.randomUniform([1, 16, 24, 4], 0, 1, 'float32', 3),
               tf.oneHot(tf.zeros([1, 16, 24], 'int32'), 4),
               tf.oneHot(tf.zeros([1, 16, 24], 'int32'), 4)];
    const ya = (a.predict(x) as tf.Tensor).dataSync();
    const yb = (b.predict(x) as tf.Tensor).dataSync();
    expect(Array.from(ya)).toEqual(Array.from(yb));
  });

  it('pads awkward raster sizes up to the pooling granularity', () => {
    const cfg = resolveConfig({ height: 30, width: 1250 });
    expect(paddedSize(cfg)).toEqual({ height: 32, width: 1252 });
    const model = buildModel(cfg);
    expect(model.inputs[0].shape.slice(1)).toEqual([32, 1252, 4]);
  });
});

describe('saveModel/loadModel', () => {
  it('round trips weights and config', async () => {
    const dir = mkdtempSync(path.join(tmpdir(), 'model-'));
    const model = buildModel(SMALL);
    await saveModel(dir, model, SMALL);
    const loaded = await loadModel(dir);
    expect(loaded.config).toEqual(SMALL);
    const x = [tf.randomUniform([2, 16, 24, 4], 0, 1, 'float32', 11),
               tf.oneHot(tf.ones([2, 16, 24], 'int32'), 4),
               tf.oneHot(tf.ones([2, 16, 24], 'int32'), 4)];
    const before = (model.predict(x) as tf.Tensor).dataSync();
    const after = (loaded.model.predict(x) as tf.Tensor).dataSync();
    expect(Array.from(after)).toEqual(Array.from(before));
  });
});
