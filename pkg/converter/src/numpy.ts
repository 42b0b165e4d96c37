/**
 * Decode the array-shaped PyObjects a MANO pickle contains: plain numpy
 * ndarrays, scipy CSC/CSR sparse matrices, and chumpy-wrapped arrays.
 * Every array lands as float64 values plus a shape (float64 holds all the
 * integer dtypes the asset uses exactly).
 */

import { PyObject, PyTuple, PyValue } from "./pickle.js";

export interface NdArray {
  shape: number[];
  data: Float64Array;
}

const NDARRAY_RECONSTRUCT = new Set([
  "numpy.core.multiarray _reconstruct",
  "numpy._core.multiarray _reconstruct",
]);

const SPARSE_CLASSES = new Set([
  "scipy.sparse._csc csc_matrix",
  "scipy.sparse.csc csc_matrix",
  "scipy.sparse._csr csr_matrix",
  "scipy.sparse.csr csr_matrix",
]);

interface DTypeInfo {
  code: string; // e.g. f8, u4, i8
  littleEndian: boolean;
}

function decodeDtype(obj: PyValue, field: string): DTypeInfo {
  if (!(obj instanceof PyObject) || obj.cls !== "numpy dtype") {
    throw new Error(`${field}: expected a numpy dtype object`);
  }
  const code = obj.args[0];
  if (typeof code !== "string") {
    throw new Error(`${field}: dtype constructor argument is not a string`);
  }
  let littleEndian = true;
  if (obj.state instanceof PyTuple) {
    const order = obj.state.items[1];
    if (order === ">") littleEndian = false;
  }
  return { code, littleEndian };
}

function readValues(dtype: DTypeInfo, raw: Uint8Array, field: string): Float64Array {
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  const le = dtype.littleEndian;
  const readers: Record<string, [number, (off: number) => number]> = {
    f8: [8, (o) => view.getFloat64(o, le)],
    f4: [4, (o) => view.getFloat32(o, le)],
    i8: [8, (o) => Number(view.getBigInt64(o, le))],
    u8: [8, (o) => Number(view.getBigUint64(o, le))],
    i4: [4, (o) => view.getInt32(o, le)],
    u4: [4, (o) => view.getUint32(o, le)],
    i2: [2, (o) => view.getInt16(o, le)],
    u2: [2, (o) => view.getUint16(o, le)],
    i1: [1, (o) => view.getInt8(o)],
    u1: [1, (o) => view.getUint8(o)],
    b1: [1, (o) => view.getUint8(o)],
  };
  const reader = readers[dtype.code];
  if (!reader) {
    throw new Error(`${field}: unsupported dtype ${dtype.code}`);
  }
  const [width, read] = reader;
  if (raw.byteLength % width !== 0) {
    throw new Error(`${field}: buffer size ${raw.byteLength} not a multiple of ${width}`);
  }
  const n = raw.byteLength / width;
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const v = read(i * width);
    if ((dtype.code === "i8" || dtype.code === "u8") && Math.abs(v) > Number.MAX_SAFE_INTEGER) {
      throw new Error(`${field}: 64-bit integer exceeds the safe float range`);
    }
    out[i] = v;
  }
  return out;
}

function tupleToNumbers(t: PyValue, field: string): number[] {
  if (!(t instanceof PyTuple)) {
    throw new Error(`${field}: expected a tuple`);
  }
  return t.items.map((v) => {
    if (typeof v !== "number") throw new Error(`${field}: non-numeric tuple entry`);
    return v;
  });
}

function decodeNdArray(obj: PyObject, field: string): NdArray {
  // _reconstruct state: (version, shape, dtype, is_fortran, data)
  if (!(obj.state instanceof PyTuple) || obj.state.items.length < 5) {
    throw new Error(`${field}: ndarray has no reconstruction state`);
  }
  const [, shapeT, dtypeObj, fortran, payload] = obj.state.items;
  const shape = tupleToNumbers(shapeT, `${field}.shape`);
  if (fortran === true) {
    throw new Error(`${field}: Fortran-ordered arrays are not supported`);
  }
  const dtype = decodeDtype(dtypeObj, field);
  if (!(payload instanceof Uint8Array)) {
    throw new Error(`${field}: ndarray payload is not raw bytes (object arrays unsupported)`);
  }
  const data = readValues(dtype, payload, field);
  const expected = shape.reduce((a, b) => a * b, 1);
  if (data.length !== expected) {
    throw new Error(`${field}: shape ${shape.join("x")} needs ${expected} values, got ${data.length}`);
  }
  return { shape, data };
}

function densifySparse(obj: PyObject, field: string): NdArray {
  const state = obj.state;
  if (!(state instanceof Map)) {
    throw new Error(`${field}: sparse matrix has no dict state`);
  }
  const get = (k: string) => {
    for (const [key, value] of state.entries()) {
      if (key === k) return value;
    }
    return undefined;
  };
  const shapeV = get("_shape") ?? get("shape");
  const shape = tupleToNumbers(shapeV as PyValue, `${field}._shape`);
  const data = toArray(get("data") as PyValue, `${field}.data`);
  const indices = toArray(get("indices") as PyValue, `${field}.indices`);
  const indptr = toArray(get("indptr") as PyValue, `${field}.indptr`);
  const [rows, cols] = shape;
  const dense = new Float64Array(rows * cols);
  const csc = obj.cls.includes("csc");
  const outer = csc ? cols : rows;
  for (let o = 0; o < outer; o++) {
    for (let k = indptr.data[o]; k < indptr.data[o + 1]; k++) {
      const inner = indices.data[k];
      const r = csc ? inner : o;
      const c = csc ? o : inner;
      dense[r * cols + c] = data.data[k];
    }
  }
  return { shape: [rows, cols], data: dense };
}

/** Unwrap any supported array container into a dense NdArray. */
export function toArray(value: PyValue, field: string): NdArray {
  if (value instanceof PyObject) {
    if (NDARRAY_RECONSTRUCT.has(value.cls)) {
      return decodeNdArray(value, field);
    }
    if (SPARSE_CLASSES.has(value.cls)) {
      return densifySparse(value, field);
    }
    if (value.cls.startsWith("chumpy")) {
      const state = value.state;
      if (state instanceof Map) {
        for (const [key, inner] of state.entries()) {
          if (key === "x") return toArray(inner, `${field}.x`);
        }
      }
      throw new Error(`${field}: chumpy wrapper without an 'x' array`);
    }
    throw new Error(`${field}: cannot interpret object of class '${value.cls}' as an array`);
  }
  throw new Error(`${field}: expected an array, got ${typeof value}`);
}

export function at(a: NdArray, ...idx: number[]): number {
  let flat = 0;
  for (let d = 0; d < a.shape.length; d++) {
    flat = flat * a.shape[d] + idx[d];
  }
  return a.data[flat];
}

export function toNested(a: NdArray, integer = false): unknown {
  const build = (dim: number, offset: number): unknown => {
    const n = a.shape[dim];
    const stride = a.shape.slice(dim + 1).reduce((x, y) => x * y, 1);
    const out = new Array(n);
    for (let i = 0; i < n; i++) {
      if (dim === a.shape.length - 1) {
        out[i] = integer ? Math.trunc(a.data[offset + i]) : a.data[offset + i];
      } else {
        out[i] = build(dim + 1, offset + i * stride);
      }
    }
    return out;
  };
  return a.shape.length === 0 ? a.data[0] : build(0, 0);
}
