/**
 * Inference: read a simulator raster, predict the per-cell intensity, and
 * write a 1-channel raster the simulator can apply in from_predictor mode.
 * Every cell is populated (consumers mask, producers do not) and values
 * are clamped to [0, 1].
 */

import * as tf from '@tensorflow/tfjs';

import { batchToTensors, disposeBatch, sampleFromRaster } from './data';
import { LoadedModel, paddedSize } from './model';
import { RangeRaster, readRaster, writeRaster } from './raster';

export function predictRaster(loaded: LoadedModel, raster: RangeRaster,
                              source = '<raster>'): RangeRaster {
  const { model, config } = loaded;
  const sample = sampleFromRaster(raster, config, source);
  const batch = batchToTensors([sample], config);
  const padded = tf.tidy(() => {
    const pred = model.predict(batch.inputs) as tf.Tensor;
    const denorm = pred.mul(config.targetStd).add(config.targetMean);
    return denorm.clipByValue(0, 1).dataSync();
  });
  disposeBatch(batch);
  // crop the network padding back to the logical raster size
  const pw = paddedSize(config).width;
  const plane = new Float32Array(config.height * config.width);
  for (let row = 0; row < config.height; row++) {
    for (let col = 0; col < config.width; col++) {
      plane[row * config.width + col] = padded[row * pw + col];
    }
  }
  return {
    header: {
      format_version: raster.header.format_version,
      height: raster.header.height,
      width: raster.header.width,
      channels: ['intensity'],
      dtype: 'f32le',
      frame_index: raster.header.frame_index,
      sector: raster.header.sector,
    },
    data: plane,
  };
}

export function inferFile(loaded: LoadedModel, inPath: string,
                          outPath: string): void {
  const raster = readRaster(inPath);
  writeRaster(outPath, predictRaster(loaded, raster, inPath));
}
