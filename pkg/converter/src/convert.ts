/**
 * Map an official MANO pickle (right hand) onto the portable hand-model
 * JSON format consumed by the silhouette-fitting tool.
 *
 * The regressed joint set is extended from the asset's 16 skeleton joints
 * to the 21-joint convention (wrist, then proximal/middle/distal/tip per
 * finger, thumb through pinky) by appending one-hot fingertip selector
 * rows; the default fingertip vertex indices follow the de-facto
 * convention (thumb 745, index 317, middle 444, ring 556, pinky 673) and
 * can be overridden. Pose-corrective blend shapes keyed on 135 rotation
 * residuals are linearized onto the 45 articulation axes via the
 * small-angle map vec(R - I) = skew(axis_angle).
 */

import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

import { loads, PyObject, PyValue } from "./pickle.js";
import { NdArray, at, toArray, toNested } from "./numpy.js";

export const DEFAULT_FINGERTIPS = [745, 317, 444, 556, 673];

export const MODEL_FORMAT_VERSION = 1;

const NUM_VERTICES = 778;
const NUM_SKELETON = 16;
const NUM_AXES = 45;

/** MANO skeleton finger blocks, in thumb..pinky output order. */
const FINGER_BLOCKS: Record<string, [number, number, number]> = {
  thumb: [13, 14, 15],
  index: [1, 2, 3],
  middle: [4, 5, 6],
  ring: [10, 11, 12],
  pinky: [7, 8, 9],
};
const FINGER_ORDER = ["thumb", "index", "middle", "ring", "pinky"];

export interface ConversionReport {
  sourceSha256: string;
  arrayShapes: Record<string, number[]>;
  nPc: number;
  outputPath: string;
  outputSha256: string;
  fingertipVertices: number[];
}

function expectShape(a: NdArray, shape: number[], field: string): NdArray {
  if (
    a.shape.length !== shape.length ||
    a.shape.some((s, i) => shape[i] >= 0 && s !== shape[i])
  ) {
    throw new Error(
      `${field}: expected shape ${shape.join("x")}, got ${a.shape.join("x")}`
    );
  }
  return a;
}

function getKey(dict: Map<PyValue, PyValue>, key: string): PyValue {
  for (const [k, v] of dict.entries()) {
    if (k === key) return v;
  }
  throw new Error(`missing key '${key}' in the MANO pickle`);
}

/** Linearize 135-dim rotation-residual blend shapes onto the 45 axes. */
function linearizePoseCorrectives(posedirs: NdArray): number[][][] {
  expectShape(posedirs, [NUM_VERTICES, 3, 135], "posedirs");
  // vec(skew([x, y, z])) in row-major 3x3 order: the six nonzero slots
  const slots: [number, number, number][] = [
    // [residual index within the joint's 9, axis, sign]
    [1, 2, -1],
    [2, 1, 1],
    [3, 2, 1],
    [5, 0, -1],
    [6, 1, -1],
    [7, 0, 1],
  ];
  const out: number[][][] = [];
  for (let v = 0; v < NUM_VERTICES; v++) {
    const perVertex: number[][] = [];
    for (let c = 0; c < 3; c++) {
      const row = new Array<number>(NUM_AXES).fill(0);
      for (let j = 0; j < 15; j++) {
        for (const [k, axis, sign] of slots) {
          row[3 * j + axis] += sign * at(posedirs, v, c, 9 * j + k);
        }
      }
      perVertex.push(row);
    }
    out.push(perVertex);
  }
  return out;
}

export interface ConvertOptions {
  nPc: 6 | 45;
  fingertips?: number[];
}

export function convertManoBuffer(raw: Uint8Array, options: ConvertOptions) {
  const fingertips = options.fingertips ?? DEFAULT_FINGERTIPS;
  if (fingertips.length !== 5 || fingertips.some((v) => v < 0 || v >= NUM_VERTICES)) {
    throw new Error(`fingertips: need 5 vertex indices below ${NUM_VERTICES}`);
  }
  const root = loads(raw);
  if (!(root instanceof Map)) {
    throw new Error("MANO pickle does not contain a top-level dict");
  }

  const template = expectShape(
    toArray(getKey(root, "v_template"), "v_template"), [NUM_VERTICES, 3], "v_template"
  );
  const faces = toArray(getKey(root, "f"), "f");
  expectShape(faces, [-1, 3], "f");
  const shapedirs = expectShape(
    toArray(getKey(root, "shapedirs"), "shapedirs"), [NUM_VERTICES, 3, 10], "shapedirs"
  );
  const posedirs = toArray(getKey(root, "posedirs"), "posedirs");
  const weights = expectShape(
    toArray(getKey(root, "weights"), "weights"), [NUM_VERTICES, NUM_SKELETON], "weights"
  );
  const components = expectShape(
    toArray(getKey(root, "hands_components"), "hands_components"), [NUM_AXES, NUM_AXES],
    "hands_components"
  );
  const mean = expectShape(
    toArray(getKey(root, "hands_mean"), "hands_mean"), [NUM_AXES], "hands_mean"
  );
  const jRegressor = expectShape(
    toArray(getKey(root, "J_regressor"), "J_regressor"), [NUM_SKELETON, NUM_VERTICES],
    "J_regressor"
  );
  const kintree = expectShape(
    toArray(getKey(root, "kintree_table"), "kintree_table"), [2, NUM_SKELETON],
    "kintree_table"
  );

  // parents: row 0, root sentinel (large unsigned) becomes -1
  const parents: number[] = [];
  for (let j = 0; j < NUM_SKELETON; j++) {
    const p = at(kintree, 0, j);
    parents.push(p >= NUM_SKELETON || p < 0 ? -1 : Math.trunc(p));
  }
  if (parents[0] !== -1) {
    throw new Error("kintree_table: joint 0 is not the root");
  }

  // pose PCA basis: first nPc principal components as columns
  const basis: number[][] = [];
  for (let a = 0; a < NUM_AXES; a++) {
    const row = new Array<number>(options.nPc);
    for (let c = 0; c < options.nPc; c++) {
      row[c] = at(components, c, a);
    }
    basis.push(row);
  }

  // 21-joint regressor in the output convention
  const jreg21: number[][] = [];
  const denseRow = (j: number) => {
    const row = new Array<number>(NUM_VERTICES);
    for (let v = 0; v < NUM_VERTICES; v++) row[v] = at(jRegressor, j, v);
    return row;
  };
  jreg21.push(denseRow(0)); // wrist
  for (const finger of FINGER_ORDER) {
    const [a, b, c] = FINGER_BLOCKS[finger];
    jreg21.push(denseRow(a), denseRow(b), denseRow(c));
    const tip = new Array<number>(NUM_VERTICES).fill(0);
    tip[fingertips[FINGER_ORDER.indexOf(finger)]] = 1.0;
    jreg21.push(tip);
  }

  const rest16: number[][] = [];
  for (let j = 0; j < NUM_SKELETON; j++) rest16.push(denseRow(j));

  const model = {
    format_version: MODEL_FORMAT_VERSION,
    n_pc: options.nPc,
    template_vertices: toNested(template),
    faces: toNested(faces, true),
    shape_basis: toNested(shapedirs),
    pose_pca_basis: basis,
    pose_mean: toNested(mean),
    pose_corrective_basis: linearizePoseCorrectives(posedirs),
    skinning_weights: toNested(weights),
    kinematic_parents: parents,
    joint_regressor: jreg21,
    rest_joint_regressor: rest16,
    meta: {
      source: "MANO right-hand asset",
      fingertip_vertices: fingertips,
      joint_order: "wrist, then proximal/middle/distal/tip per finger, thumb..pinky",
    },
  };

  const arrayShapes: Record<string, number[]> = {
    v_template: template.shape,
    f: faces.shape,
    shapedirs: shapedirs.shape,
    posedirs: posedirs.shape,
    weights: weights.shape,
    hands_components: components.shape,
    hands_mean: mean.shape,
    J_regressor: jRegressor.shape,
    kintree_table: kintree.shape,
  };
  return { model, arrayShapes };
}

export function convert(
  sourcePath: string,
  nPc: 6 | 45,
  outPath: string,
  fingertips?: number[]
): ConversionReport {
  const raw = new Uint8Array(readFileSync(sourcePath));
  const { model, arrayShapes } = convertManoBuffer(raw, { nPc, fingertips });
  const json = JSON.stringify(model);
  writeFileSync(outPath, json);
  const outputSha = createHash("sha256").update(json).digest("hex");
  writeFileSync(`${outPath}.sha256`, `${outputSha}  ${outPath}\n`);
  return {
    sourceSha256: createHash("sha256").update(raw).digest("hex"),
    arrayShapes,
    nPc,
    outputPath: outPath,
    outputSha256: outputSha,
    fingertipVertices: fingertips ?? DEFAULT_FINGERTIPS,
  };
}
