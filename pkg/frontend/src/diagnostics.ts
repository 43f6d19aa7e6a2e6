// Latency / throughput counters surfaced in the overlay.

export class Diagnostics {
  rttMs = NaN;                 // control -> ack
  reflectMs = NaN;             // control -> first frame generated under it
  fps = 0;
  lagDuplicates = 0;           // repeated frame indices from the server
  private sendTimes = new Map<number, number>();
  private pendingSeq: number | null = null;
  private frameTimes: number[] = [];
  private lastFrameIndex = -1;
  private nextSeqGuess = 1;

  constructor(private readonly now: () => number = () => performance.now()) {}

  onControlSent(): number {
    const seq = this.nextSeqGuess++;
    this.sendTimes.set(seq, this.now());
    this.pendingSeq = seq;
    return seq;
  }

  onAck(seq: number): void {
    const t0 = this.sendTimes.get(seq);
    if (t0 !== undefined) this.rttMs = this.now() - t0;
  }

  onFrame(frameIndex: number, controlSeq: number): void {
    const t = this.now();
    this.frameTimes.push(t);
    while (this.frameTimes.length > 0 && t - this.frameTimes[0] > 2000) this.frameTimes.shift();
    if (this.frameTimes.length > 1) {
      this.fps = (this.frameTimes.length - 1) /
        ((t - this.frameTimes[0]) / 1000);
    }
    if (frameIndex === this.lastFrameIndex) this.lagDuplicates++;
    this.lastFrameIndex = frameIndex;
    if (this.pendingSeq !== null && controlSeq >= this.pendingSeq) {
      const t0 = this.sendTimes.get(this.pendingSeq);
      if (t0 !== undefined) this.reflectMs = t - t0;
      this.pendingSeq = null;
    }
  }

  summary(): string {
    const f = (v: number, unit: string) => (Number.isFinite(v) ? `${v.toFixed(0)}${unit}` : "-");
    return `rtt ${f(this.rttMs, "ms")} | reflect ${f(this.reflectMs, "ms")} | ` +
      `${this.fps.toFixed(1)} fps | lag ${this.lagDuplicates}`;
  }
}
