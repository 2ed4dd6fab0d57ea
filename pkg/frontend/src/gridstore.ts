// Client-side belief grid reconstructed from keyframes plus deltas.
// The rendered grid must equal the server's raster exactly; every frame
// carries a CRC32 checksum over the row-major int8 state bytes.

import type { GridMessage, GridRun } from "./protocol.js";

const CRC_TABLE = buildCrcTable();

function buildCrcTable(): Uint32Array {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
}

export function crc32OfStates(cells: Int8Array): number {
  let crc = 0xffffffff;
  for (let i = 0; i < cells.length; i++) {
    crc = CRC_TABLE[(crc ^ (cells[i] & 0xff)) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

export function applyRuns(cells: Int8Array, runs: GridRun[]): void {
  for (const [start, length, state] of runs) {
    cells.fill(state, start, start + length);
  }
}

export class GridStore {
  readonly width: number;
  readonly height: number;
  readonly cells: Int8Array;
  private synced = false;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.cells = new Int8Array(width * height);
  }

  /** Applies a grid message; returns false when the result fails the
   * server checksum (caller should resync with a fresh keyframe). */
  apply(msg: GridMessage): boolean {
    if (msg.keyframe) {
      this.cells.fill(0);
      this.synced = true;
    } else if (!this.synced) {
      return false; // deltas are meaningless before the first keyframe
    }
    applyRuns(this.cells, msg.runs);
    const ok = crc32OfStates(this.cells) === msg.checksum;
    if (!ok) this.synced = false;
    return ok;
  }

  /** Count of cells a message would change (exposed for tests/UI). */
  changedBy(msg: GridMessage): number {
    let changed = 0;
    for (const [start, length, state] of msg.runs) {
      for (let i = start; i < start + length; i++) {
        if (this.cells[i] !== state) changed++;
      }
    }
    return changed;
  }

  stateAt(col: number, row: number): number {
    return this.cells[row * this.width + col];
  }
}
