/**
 * RangeRaster container I/O.
 *
 * One `.rr` file is a 4-byte little-endian header length, a UTF-8 JSON
 * header, and a planar row-major float32 little-endian payload of shape
 * (channels, height, width). Channels are addressed by the names listed
 * in the header, never by position.
 */

import { readFileSync, writeFileSync } from 'fs';

export interface RasterHeader {
  format_version: number;
  height: number;
  width: number;
  channels: string[];
  dtype: string;
  frame_index: number;
  sector: string;
}

export interface RangeRaster {
  header: RasterHeader;
  /** Planar payload: channels * height * width float32 values. */
  data: Float32Array;
}

export class RasterFormatError extends Error {}

export function readRaster(path: string): RangeRaster {
  const raw = readFileSync(path);
  if (raw.length < 4) {
    throw new RasterFormatError(`${path}: truncated header length`);
  }
  const headerLen = raw.readUInt32LE(0);
  if (raw.length < 4 + headerLen) {
    throw new RasterFormatError(`${path}: truncated header`);
  }
  let header: RasterHeader;
  try {
    header = JSON.parse(raw.subarray(4, 4 + headerLen).toString('utf-8'));
  } catch (err) {
    throw new RasterFormatError(`${path}: bad header JSON: ${err}`);
  }
  if (header.dtype !== 'f32le') {
    throw new RasterFormatError(`${path}: unsupported dtype ${header.dtype}`);
  }
  const expected = 4 * header.channels.length * header.height * header.width;
  const payload = raw.subarray(4 + headerLen);
  if (payload.length !== expected) {
    throw new RasterFormatError(
      `${path}: payload is ${payload.length} bytes, header implies ${expected}`);
  }
  // Copy out of the Buffer so the view owns aligned memory.
  const data = new Float32Array(expected / 4);
  for (let i = 0; i < data.length; i++) {
    data[i] = payload.readFloatLE(i * 4);
  }
  return { header, data };
}

export function writeRaster(path: string, raster: RangeRaster): void {
  const { header, data } = raster;
  const expected = header.channels.length * header.height * header.width;
  if (data.length !== expected) {
    throw new RasterFormatError(
      `payload has ${data.length} values, header implies ${expected}`);
  }
  const headerBytes = Buffer.from(canonicalHeaderJson(header), 'utf-8');
  const out = Buffer.alloc(4 + headerBytes.length + 4 * data.length);
  out.writeUInt32LE(headerBytes.length, 0);
  headerBytes.copy(out, 4);
  for (let i = 0; i < data.length; i++) {
    out.writeFloatLE(data[i], 4 + headerBytes.length + i * 4);
  }
  writeFileSync(path, out);
}

/** Key-sorted compact JSON, matching the simulator's header serialization. */
export function canonicalHeaderJson(header: RasterHeader): string {
  const sorted: Record<string, unknown> = {};
  for (const key of Object.keys(header).sort()) {
    sorted[key] = (header as unknown as Record<string, unknown>)[key];
  }
  return JSON.stringify(sorted);
}

/** View one named channel as a (height * width) plane. */
export function channelPlane(raster: RangeRaster, name: string): Float32Array {
  const idx = raster.header.channels.indexOf(name);
  if (idx < 0) {
    throw new RasterFormatError(
      `raster has no channel '${name}'; available: ${raster.header.channels.join(', ')}`);
  }
  const size = raster.header.height * raster.header.width;
  return raster.data.subarray(idx * size, (idx + 1) * size);
}

export function requireChannels(raster: RangeRaster, names: string[]): void {
  const missing = names.filter((n) => !raster.header.channels.includes(n));
  if (missing.length > 0) {
    throw new RasterFormatError(
      `raster is missing channels [${missing.join(', ')}]; ` +
      `expected [${names.join(', ')}], found [${raster.header.channels.join(', ')}]`);
  }
}
