// Client-side forward kinematics, mirroring the server contract:
//   pos[j] = pos[parent[j]] + R_global[parent[j]] * offset[j]
//   R_global[j] = R_global[parent[j]] * R_local[j]
// 6D rotations store the first two matrix columns; Gram-Schmidt on decode.
// Must agree with the shared fixture within 1e-4 m.

export interface Skeleton {
  joint_count: number;
  parents: number[];
  offsets: number[][];     // [J][3]
  foot_joints: number[];
  toe_joints: number[];
  names?: string[];
}

export type Mat3 = Float64Array; // column-major 3x3: m[col*3 + row]

function normalize(v: [number, number, number]): [number, number, number] {
  const n = Math.hypot(v[0], v[1], v[2]) || 1e-12;
  return [v[0] / n, v[1] / n, v[2] / n];
}

function cross(a: [number, number, number], b: [number, number, number]): [number, number, number] {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

export function rot6dToMatrix(r: ArrayLike<number>, off = 0): Mat3 {
  const a: [number, number, number] = [r[off], r[off + 1], r[off + 2]];
  const b: [number, number, number] = [r[off + 3], r[off + 4], r[off + 5]];
  const x = normalize(a);
  const d = x[0] * b[0] + x[1] * b[1] + x[2] * b[2];
  const y = normalize([b[0] - d * x[0], b[1] - d * x[1], b[2] - d * x[2]]);
  const z = cross(x, y);
  const m = new Float64Array(9);
  m[0] = x[0]; m[1] = x[1]; m[2] = x[2];
  m[3] = y[0]; m[4] = y[1]; m[5] = y[2];
  m[6] = z[0]; m[7] = z[1]; m[8] = z[2];
  return m;
}

function matMul(a: Mat3, b: Mat3): Mat3 {
  const o = new Float64Array(9);
  for (let c = 0; c < 3; c++) {
    for (let r = 0; r < 3; r++) {
      o[c * 3 + r] = a[r] * b[c * 3] + a[3 + r] * b[c * 3 + 1] + a[6 + r] * b[c * 3 + 2];
    }
  }
  return o;
}

function matVec(m: Mat3, v: ArrayLike<number>): [number, number, number] {
  return [
    m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
    m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
    m[2] * v[0] + m[5] * v[1] + m[8] * v[2],
  ];
}

/** Global joint positions: root (3), rotations flat (J*6) -> [J][3]. */
export function forwardKinematics(
  skeleton: Skeleton, root: ArrayLike<number>, rot6d: ArrayLike<number>,
): number[][] {
  const J = skeleton.joint_count;
  const globals: Mat3[] = new Array(J);
  const pos: number[][] = new Array(J);
  globals[0] = rot6dToMatrix(rot6d, 0);
  pos[0] = [root[0], root[1], root[2]];
  for (let j = 1; j < J; j++) {
    const p = skeleton.parents[j];
    const gp = globals[p];
    const step = matVec(gp, skeleton.offsets[j]);
    pos[j] = [pos[p][0] + step[0], pos[p][1] + step[1], pos[p][2] + step[2]];
    globals[j] = matMul(gp, rot6dToMatrix(rot6d, j * 6));
  }
  return pos;
}

/** Bone segments (parent -> child pairs) for rendering. */
export function boneSegments(skeleton: Skeleton, positions: number[][]): Array<[number[], number[]]> {
  const out: Array<[number[], number[]]> = [];
  for (let j = 1; j < skeleton.joint_count; j++) {
    out.push([positions[skeleton.parents[j]], positions[j]]);
  }
  return out;
}
