// three.js scene: skeleton as bone segments, ball sphere, planned-trajectory
// polyline on the ground, orbit-follow camera.

import * as THREE from "three";

import { boneSegments, forwardKinematics, Skeleton } from "./fk.js";
import type { WireFrame } from "./protocol.js";

const BALL_RADIUS = 0.11;
const MAX_TRAIL = 120;

export class SceneView {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private bones: THREE.LineSegments;
  private bonePositions: THREE.BufferAttribute;
  private ball: THREE.Mesh;
  private trail: THREE.Line;
  private trailPoints: number[] = [];
  invalidFrames = 0;

  constructor(private readonly skeleton: Skeleton, canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(50, canvas.width / canvas.height, 0.05, 100);
    this.camera.position.set(-3, 2.2, 2.5);
    this.scene.background = new THREE.Color(0x10141c);

    const grid = new THREE.GridHelper(30, 30, 0x335533, 0x223322);
    this.scene.add(grid);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(4, 8, 2);
    this.scene.add(sun);

    const segCount = (skeleton.joint_count - 1) * 2;
    this.bonePositions = new THREE.BufferAttribute(new Float32Array(segCount * 3), 3);
    const boneGeom = new THREE.BufferGeometry();
    boneGeom.setAttribute("position", this.bonePositions);
    this.bones = new THREE.LineSegments(
      boneGeom, new THREE.LineBasicMaterial({ color: 0xffc857, linewidth: 2 }));
    this.bones.frustumCulled = false;
    this.scene.add(this.bones);

    this.ball = new THREE.Mesh(
      new THREE.SphereGeometry(BALL_RADIUS, 24, 16),
      new THREE.MeshStandardMaterial({ color: 0xffffff, roughness: 0.4 }));
    this.scene.add(this.ball);

    const trailGeom = new THREE.BufferGeometry();
    trailGeom.setAttribute("position",
      new THREE.BufferAttribute(new Float32Array(MAX_TRAIL * 3), 3));
    this.trail = new THREE.Line(
      trailGeom, new THREE.LineBasicMaterial({ color: 0x4da3ff }));
    this.trail.frustumCulled = false;
    this.scene.add(this.trail);
  }

  renderFrame(frame: WireFrame): void {
    if (frame.root.length !== 3 || frame.rot.length !== this.skeleton.joint_count * 6) {
      this.invalidFrames++;
      return;
    }
    const pos = forwardKinematics(this.skeleton, frame.root, frame.rot);
    const segs = boneSegments(this.skeleton, pos);
    const arr = this.bonePositions.array as Float32Array;
    let k = 0;
    for (const [a, b] of segs) {
      arr[k++] = a[0]; arr[k++] = a[1]; arr[k++] = a[2];
      arr[k++] = b[0]; arr[k++] = b[1]; arr[k++] = b[2];
    }
    this.bonePositions.needsUpdate = true;

    this.ball.position.set(frame.ball[0], frame.ball[1], frame.ball[2]);

    // ground polyline of the executed root path (stands in for the plan)
    this.trailPoints.push(frame.root[0], 0.01, frame.root[2]);
    if (this.trailPoints.length > MAX_TRAIL * 3) this.trailPoints.splice(0, 3);
    const tarr = (this.trail.geometry.getAttribute("position") as THREE.BufferAttribute);
    (tarr.array as Float32Array).set(this.trailPoints);
    this.trail.geometry.setDrawRange(0, this.trailPoints.length / 3);
    tarr.needsUpdate = true;

    // follow camera
    const target = new THREE.Vector3(frame.root[0], 1.0, frame.root[2]);
    this.camera.position.lerp(
      new THREE.Vector3(frame.root[0] - 3.0, 2.2, frame.root[2] + 2.5), 0.05);
    this.camera.lookAt(target);
    this.renderer.render(this.scene, this.camera);
  }
}
