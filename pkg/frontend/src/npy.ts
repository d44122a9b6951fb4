/**
 * Reader/writer for the restricted `.npy` layout the evaluation CLI
 * accepts: version 1.0, little-endian float32/float64, C order, 2-D.
 * The byte-level definition lives in docs/formats.md of the main
 * package; this module is written against that document.
 */

const MAGIC = Uint8Array.from([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59]); // \x93NUMPY

/** A dense row-major matrix handed to or received from the CLI. */
export interface BoundArray {
  data: Float64Array | Float32Array | readonly number[];
  rows: number;
  cols: number;
  /** Only row-major (C order) data is supported; `false` is rejected. */
  rowMajor?: boolean;
}

/** Throws unless `arr` is a well-formed row-major matrix. */
export function assertBoundArray(arr: BoundArray, name = "array"): void {
  if (!Number.isInteger(arr.rows) || !Number.isInteger(arr.cols)) {
    throw new Error(`${name}: rows and cols must be integers`);
  }
  if (arr.rows < 1 || arr.cols < 1) {
    throw new Error(`${name}: need rows >= 1 and cols >= 1, got ${arr.rows}x${arr.cols}`);
  }
  if (arr.rowMajor === false) {
    throw new Error(`${name}: column-major data is not supported; transpose it first`);
  }
  if (arr.data.length !== arr.rows * arr.cols) {
    throw new Error(
      `${name}: data holds ${arr.data.length} values, shape ${arr.rows}x${arr.cols} needs ${arr.rows * arr.cols}`,
    );
  }
}

/**
 * Serializes a matrix as a version 1.0 `.npy` file (descr `<f8`, or
 * `<f4` when the input is a Float32Array). The header is padded so the
 * payload starts on a 64-byte boundary, matching common writers.
 */
export function writeNpy(arr: BoundArray): Uint8Array {
  assertBoundArray(arr);
  const f32 = arr.data instanceof Float32Array;
  const descr = f32 ? "<f4" : "<f8";
  const itemsize = f32 ? 4 : 8;
  const header = `{'descr': '${descr}', 'fortran_order': False, 'shape': (${arr.rows}, ${arr.cols}), }`;
  const unpadded = 10 + header.length + 1;
  const pad = (64 - (unpadded % 64)) % 64;
  const headerText = header + " ".repeat(pad) + "\n";

  const out = new Uint8Array(10 + headerText.length + arr.rows * arr.cols * itemsize);
  out.set(MAGIC, 0);
  out[6] = 1;
  out[7] = 0;
  const view = new DataView(out.buffer);
  view.setUint16(8, headerText.length, true);
  for (let i = 0; i < headerText.length; i++) out[10 + i] = headerText.charCodeAt(i);

  let offset = 10 + headerText.length;
  const n = arr.rows * arr.cols;
  for (let i = 0; i < n; i++) {
    const v = Number(arr.data[i]);
    if (!Number.isFinite(v)) {
      throw new Error(`non-finite value at row ${Math.floor(i / arr.cols)}, col ${i % arr.cols}`);
    }
    if (f32) {
      view.setFloat32(offset, v, true);
      offset += 4;
    } else {
      view.setFloat64(offset, v, true);
      offset += 8;
    }
  }
  return out;
}

const HEADER_RE =
  /^\{'descr': '(<f[48])', 'fortran_order': (True|False), 'shape': \((\d+), (\d+)\),? ?\}\s*$/;

/**
 * Parses a `.npy` file in the accepted subset. Values widen to float64
 * regardless of the on-disk dtype, mirroring the CLI's loader.
 */
export function readNpy(bytes: Uint8Array): { data: Float64Array; rows: number; cols: number } {
  if (bytes.length < 10 || !MAGIC.every((b, i) => bytes[i] === b)) {
    throw new Error("bad magic bytes; not an .npy file");
  }
  if (bytes[6] !== 1 || bytes[7] !== 0) {
    throw new Error(`unsupported format version ${bytes[6]}.${bytes[7]}`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const headerLen = view.getUint16(8, true);
  if (bytes.length < 10 + headerLen) throw new Error("truncated header");
  let headerText = "";
  for (let i = 0; i < headerLen; i++) headerText += String.fromCharCode(bytes[10 + i]!);
  const m = HEADER_RE.exec(headerText);
  if (!m) throw new Error(`unsupported .npy header: ${headerText.trim()}`);
  const [, descr, fortran, rowsText, colsText] = m;
  if (fortran === "True") throw new Error("column-major layout is not supported");
  const rows = Number(rowsText);
  const cols = Number(colsText);
  if (rows < 1 || cols < 1) throw new Error(`need rows >= 1 and cols >= 1, got ${rows}x${cols}`);
  const itemsize = descr === "<f4" ? 4 : 8;
  const payload = bytes.length - 10 - headerLen;
  if (payload !== rows * cols * itemsize) {
    throw new Error(`payload is ${payload} bytes, expected ${rows * cols * itemsize}`);
  }
  const data = new Float64Array(rows * cols);
  let offset = 10 + headerLen;
  for (let i = 0; i < data.length; i++) {
    data[i] = itemsize === 4 ? view.getFloat32(offset, true) : view.getFloat64(offset, true);
    offset += itemsize;
    if (!Number.isFinite(data[i]!)) {
      throw new Error(`non-finite value at row ${Math.floor(i / cols)}, col ${i % cols}`);
    }
  }
  return { data, rows, cols };
}
