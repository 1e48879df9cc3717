/**
 * Training loop: Adam with a cosine-decayed learning rate and decoupled
 * weight decay on kernel weights, minimizing the masked L2 objective.
 * Per-epoch masked RMSE on the train and held-out splits goes to the
 * metrics log.
 */

import { writeFileSync } from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';

import { batchToTensors, disposeBatch, Sample, SampleSet } from './data';
import { maskedL2, maskedRmse } from './loss';
import { buildModel, PredictorConfig, saveModel } from './model';
import { mulberry32, shuffled } from './random';

export interface EpochMetrics {
  epoch: number;
  learningRate: number;
  trainRmse: number;
  valRmse: number | null;
}

export interface TrainResult {
  model: tf.LayersModel;
  metrics: EpochMetrics[];
  /** Input config with the fitted target statistics filled in. */
  config: PredictorConfig;
}

function cosineLr(base: number, epoch: number, totalEpochs: number): number {
  if (totalEpochs <= 1) {
    return base;
  }
  return base * 0.5 * (1 + Math.cos(Math.PI * epoch / (totalEpochs - 1)));
}

function applyWeightDecay(model: tf.LayersModel, lr: number, decay: number): void {
  if (decay <= 0) {
    return;
  }
  const shrink = 1 - lr * decay;
  for (const w of model.trainableWeights) {
    if (w.name.includes('kernel')) {
      const v = w.read() as tf.Tensor;
      const next = tf.tidy(() => v.mul(shrink));
      (w as unknown as { write(t: tf.Tensor): void }).write(next);
      next.dispose();
    }
  }
}

function evaluateRmse(model: tf.LayersModel, samples: Sample[],
                      config: PredictorConfig): number {
  // The network predicts standardized intensity; errors scale back by the
  // stored target std, so the reported RMSE is in raster units.
  let sumSq = 0;
  let count = 0;
  for (let i = 0; i < samples.length; i += config.batchSize) {
    const batch = batchToTensors(samples.slice(i, i + config.batchSize), config);
    const pred = model.predict(batch.inputs) as tf.Tensor;
    const err = tf.tidy(() => {
      const m = batch.mask;
      const normTarget = batch.target.sub(config.targetMean).div(config.targetStd);
      const sq = pred.sub(normTarget).square().mul(m).sum();
      return [sq.dataSync()[0], m.sum().dataSync()[0]];
    });
    sumSq += err[0];
    count += err[1];
    pred.dispose();
    disposeBatch(batch);
  }
  return count > 0 ? config.targetStd * Math.sqrt(sumSq / count) : 0;
}

/** Masked mean and standard deviation of the target over a sample list. */
export function targetStatistics(samples: Sample[]): { mean: number; std: number } {
  let sum = 0;
  let count = 0;
  for (const s of samples) {
    for (let i = 0; i < s.mask.length; i++) {
      if (s.mask[i] === 1) {
        sum += s.target[i];
        count++;
      }
    }
  }
  const mean = count > 0 ? sum / count : 0;
  let varSum = 0;
  for (const s of samples) {
    for (let i = 0; i < s.mask.length; i++) {
      if (s.mask[i] === 1) {
        varSum += (s.target[i] - mean) ** 2;
      }
    }
  }
  const std = count > 1 ? Math.sqrt(varSum / count) : 1;
  return { mean, std: std > 1e-12 ? std : 1 };
}

export interface SplitSet {
  train: Sample[];
  val: Sample[];
}

/** Deterministic train/validation split. */
export function splitSamples(set: SampleSet, config: PredictorConfig): SplitSet {
  const rand = mulberry32(config.seed ^ 0x5eed);
  const order = shuffled(set.samples, rand);
  const valCount = Math.floor(order.length * config.valFraction);
  return { train: order.slice(valCount), val: order.slice(0, valCount) };
}

export async function train(split: SplitSet, config: PredictorConfig,
                            quiet = false): Promise<TrainResult> {
  if (split.train.length === 0) {
    throw new Error('training split is empty');
  }
  const stats = targetStatistics(split.train);
  config = { ...config, targetMean: stats.mean, targetStd: stats.std };
  const model = buildModel(config);
  const optimizer = tf.train.adam(config.learningRate);
  const metrics: EpochMetrics[] = [];

  for (let epoch = 0; epoch < config.epochs; epoch++) {
    const lr = cosineLr(config.learningRate, epoch, config.epochs);
    (optimizer as unknown as { learningRate: number }).learningRate = lr;
    const order = shuffled(split.train, mulberry32(config.seed * 7919 + epoch));
    let lossSum = 0;
    let batches = 0;
    for (let i = 0; i < order.length; i += config.batchSize) {
      const batch = batchToTensors(order.slice(i, i + config.batchSize), config);
      const loss = optimizer.minimize(
        () => tf.tidy(() => {
          const normTarget = batch.target.sub(config.targetMean)
            .div(config.targetStd);
          return maskedL2(model.apply(batch.inputs) as tf.Tensor,
                          normTarget, batch.mask);
        }),
        true) as tf.Scalar;
      lossSum += loss.dataSync()[0];
      loss.dispose();
      disposeBatch(batch);
      applyWeightDecay(model, lr, config.weightDecay);
      batches++;
    }
    const valRmse = split.val.length > 0
      ? evaluateRmse(model, split.val, config) : null;
    const entry: EpochMetrics = {
      epoch,
      learningRate: lr,
      trainRmse: config.targetStd * Math.sqrt(lossSum / Math.max(batches, 1)),
      valRmse,
    };
    metrics.push(entry);
    if (!quiet) {
      const val = valRmse === null ? 'n/a' : valRmse.toFixed(5);
      console.log(`epoch ${epoch + 1}/${config.epochs} ` +
                  `lr=${lr.toFixed(5)} train-rmse=${entry.trainRmse.toFixed(5)} ` +
                  `val-rmse=${val}`);
    }
  }
  optimizer.dispose();
  return { model, metrics, config };
}

export async function trainAndSave(split: SplitSet, config: PredictorConfig,
                                   outDir: string, quiet = false): Promise<TrainResult> {
  const result = await train(split, config, quiet);
  await saveModel(outDir, result.model, result.config);
  writeFileSync(path.join(outDir, 'metrics.json'),
                JSON.stringify(result.metrics, null, 2));
  return result;
}

export { evaluateRmse, maskedRmse };
