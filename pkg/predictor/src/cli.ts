#!/usr/bin/env node
/**
 * predictor train --data DIR --out MODEL_DIR [--config C.json] [--no-weather]
 * predictor infer --model MODEL_DIR --in raster.rr --out raster.int.rr
 */

import { readFileSync } from 'fs';

import { initBackend } from './backend';
import { collectRasterPaths, loadSamples } from './data';
import { inferFile } from './infer';
import { loadModel, resolveConfig, PredictorConfig } from './model';
import { splitSamples, trainAndSave } from './train';

function parseFlags(argv: string[]): Map<string, string | boolean> {
  const flags = new Map<string, string | boolean>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith('--')) {
      throw new Error(`unexpected argument ${arg}`);
    }
    const name = arg.slice(2);
    if (i + 1 < argv.length && !argv[i + 1].startsWith('--')) {
      flags.set(name, argv[++i]);
    } else {
      flags.set(name, true);
    }
  }
  return flags;
}

function requireString(flags: Map<string, string | boolean>, name: string): string {
  const value = flags.get(name);
  if (typeof value !== 'string') {
    throw new Error(`missing required --${name}`);
  }
  return value;
}

async function cmdTrain(argv: string[]): Promise<number> {
  const flags = parseFlags(argv);
  const dataDir = requireString(flags, 'data');
  const outDir = requireString(flags, 'out');
  let partial: Partial<PredictorConfig> = {};
  const configPath = flags.get('config');
  if (typeof configPath === 'string') {
    partial = JSON.parse(readFileSync(configPath, 'utf-8'));
  }
  if (flags.get('no-weather') === true) {
    partial.useWeather = false;
  }
  const seed = flags.get('seed');
  if (typeof seed === 'string') {
    partial.seed = Number(seed);
  }
  const config = resolveConfig(partial);
  const backend = await initBackend();
  console.log(`backend: ${backend}`);
  const paths = collectRasterPaths(dataDir);
  console.log(`training on ${paths.length} rasters from ${dataDir}`);
  const samples = loadSamples(paths, config);
  const split = splitSamples(samples, config);
  const result = await trainAndSave(split, config, outDir);
  const last = result.metrics[result.metrics.length - 1];
  console.log(`saved model to ${outDir} ` +
              `(final train-rmse ${last.trainRmse.toFixed(5)})`);
  return 0;
}

async function cmdInfer(argv: string[]): Promise<number> {
  const flags = parseFlags(argv);
  const modelDir = requireString(flags, 'model');
  const inPath = requireString(flags, 'in');
  const outPath = requireString(flags, 'out');
  await initBackend();
  const loaded = await loadModel(modelDir);
  inferFile(loaded, inPath, outPath);
  console.log(`wrote ${outPath}`);
  return 0;
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    if (command === 'train') {
      return await cmdTrain(rest);
    }
    if (command === 'infer') {
      return await cmdInfer(rest);
    }
    console.error('usage: predictor <train|infer> [flags]');
    return 1;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (require.main === module) {
  void main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
