export { readRaster, writeRaster, channelPlane, requireChannels,
         RangeRaster, RasterHeader, RasterFormatError } from './raster';
export { maskedL2, maskedRmse, maskIsEmpty } from './loss';
export { buildModel, saveModel, loadModel, resolveConfig, paddedSize,
         DEFAULT_CONFIG, PredictorConfig, INPUT_CHANNELS,
         TARGET_CHANNEL } from './model';
export { sampleFromRaster, loadSamples, collectRasterPaths, batchToTensors,
         disposeBatch, Sample, SampleSet } from './data';
export { train, trainAndSave, splitSamples, evaluateRmse, targetStatistics, EpochMetrics } from './train';
export { predictRaster, inferFile } from './infer';
export { initBackend } from './backend';
export { mulberry32, shuffled } from './random';
