/**
 * Reader/writer for the beamcast interchange files: one JSON header line
 * followed by raw little-endian float64 records. Dataset records hold the
 * windowed low-resolution inputs plus the next-frame high-resolution target;
 * prediction records hold one high-resolution image pair per (ue, frame).
 */

import * as fs from 'fs';

export interface Header {
  version: number;
  kind: 'dataset' | 'predictions';
  K: number;
  M_v: number;
  M_h: number;
  m_v: number;
  m_h: number;
  s: number;
  frames: number;
  seed: number;
  records: number;
  dtype: 'f64le';
  beam_order: 'row-major';
}

export interface Episode {
  ue: number;
  frame: number; // last input frame t; target belongs to t+1
  inputs: Float64Array[]; // s entries, each [m_v*m_h*2] (real_sq then imag_sq)
  target: Float64Array; // [M_v*M_h*2]
}

export interface Prediction {
  ue: number;
  frame: number;
  realSq: Float64Array; // [M_v*M_h]
  imagSq: Float64Array;
}

function datasetRecordFloats(h: Header): number {
  return 2 + h.s * 2 * h.m_v * h.m_h + 2 * h.M_v * h.M_h;
}

function predictionRecordFloats(h: Header): number {
  return 2 + 2 * h.M_v * h.M_h;
}

export function parseHeader(buf: Buffer): { header: Header; payloadStart: number } {
  const newline = buf.indexOf(0x0a);
  if (newline < 0) {
    throw new Error('interchange file: missing header line');
  }
  let obj: Record<string, unknown>;
  try {
    obj = JSON.parse(buf.subarray(0, newline).toString('utf-8'));
  } catch (err) {
    throw new Error(`interchange file: malformed JSON header (${err})`);
  }
  for (const key of ['version', 'kind', 'K', 'M_v', 'M_h', 'm_v', 'm_h', 's', 'frames', 'seed', 'records', 'dtype', 'beam_order']) {
    if (!(key in obj)) {
      throw new Error(`interchange header missing key ${key}`);
    }
  }
  if (obj.dtype !== 'f64le') {
    throw new Error(`unsupported dtype ${obj.dtype}`);
  }
  if (obj.beam_order !== 'row-major') {
    throw new Error(`unsupported beam order ${obj.beam_order}`);
  }
  return { header: obj as unknown as Header, payloadStart: newline + 1 };
}

export function readDataset(path: string): { header: Header; episodes: Episode[] } {
  const buf = fs.readFileSync(path);
  const { header, payloadStart } = parseHeader(buf);
  if (header.kind !== 'dataset') {
    throw new Error(`expected a dataset file, found kind ${header.kind}`);
  }
  const recFloats = datasetRecordFloats(header);
  const expected = header.records * recFloats * 8;
  const payload = buf.subarray(payloadStart);
  if (payload.length !== expected) {
    throw new Error(
      `dataset payload holds ${payload.length} bytes but the header implies ${expected}`,
    );
  }
  // the payload starts right after the header line, so it is not 8-aligned;
  // copy into a fresh ArrayBuffer before viewing as float64 (little-endian host)
  const aligned = new ArrayBuffer(payload.length);
  new Uint8Array(aligned).set(payload);
  const floats = new Float64Array(aligned);
  const lowLen = header.m_v * header.m_h;
  const highLen = header.M_v * header.M_h;
  const episodes: Episode[] = [];
  for (let r = 0; r < header.records; r++) {
    const base = r * recFloats;
    const ue = floats[base];
    const frame = floats[base + 1];
    const inputs: Float64Array[] = [];
    let off = base + 2;
    for (let step = 0; step < header.s; step++) {
      inputs.push(floats.slice(off, off + 2 * lowLen));
      off += 2 * lowLen;
    }
    const target = floats.slice(off, off + 2 * highLen);
    for (const v of target) {
      if (!Number.isFinite(v)) {
        throw new Error(`non-finite value in dataset record ${r}`);
      }
    }
    episodes.push({ ue, frame, inputs, target });
  }
  return { header, episodes };
}

export function writePredictions(
  path: string,
  predictions: Prediction[],
  base: Header,
): void {
  const header: Header = {
    ...base,
    kind: 'predictions',
    records: predictions.length,
  };
  const highLen = header.M_v * header.M_h;
  const recFloats = predictionRecordFloats(header);
  const ordered = [...predictions].sort((a, b) => a.ue - b.ue || a.frame - b.frame);
  const payload = new Float64Array(recFloats * ordered.length);
  ordered.forEach((pred, r) => {
    if (pred.realSq.length !== highLen || pred.imagSq.length !== highLen) {
      throw new Error(`prediction for ue=${pred.ue} frame=${pred.frame} has wrong size`);
    }
    const base_ = r * recFloats;
    payload[base_] = pred.ue;
    payload[base_ + 1] = pred.frame;
    payload.set(pred.realSq, base_ + 2);
    payload.set(pred.imagSq, base_ + 2 + highLen);
  });
  // key order matches the python writer so headers for identical metadata agree
  const obj: Record<string, unknown> = {};
  for (const key of Object.keys(header).sort()) {
    obj[key] = (header as unknown as Record<string, unknown>)[key];
  }
  const headerLine = Buffer.from(JSON.stringify(obj) + '\n', 'utf-8');
  const body = Buffer.from(payload.buffer, payload.byteOffset, payload.byteLength);
  fs.writeFileSync(path, Buffer.concat([headerLine, Buffer.from(body)]));
}
