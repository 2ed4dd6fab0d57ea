// Pan/zoom camera mapping world meters to canvas pixels (y axis up in the
// world, down on the canvas).

export interface CameraState {
  centerX: number;
  centerY: number;
  scale: number; // pixels per meter
}

export class Camera {
  state: CameraState;
  viewWidth: number;
  viewHeight: number;

  constructor(viewWidth: number, viewHeight: number, state?: CameraState) {
    this.viewWidth = viewWidth;
    this.viewHeight = viewHeight;
    this.state = state ?? { centerX: 0, centerY: 0, scale: 80 };
  }

  fit(worldWidth: number, worldHeight: number, originX = 0, originY = 0): void {
    this.state.centerX = originX + worldWidth / 2;
    this.state.centerY = originY + worldHeight / 2;
    this.state.scale = 0.95 * Math.min(
      this.viewWidth / worldWidth, this.viewHeight / worldHeight);
  }

  toScreen(wx: number, wy: number): [number, number] {
    const { centerX, centerY, scale } = this.state;
    return [
      (wx - centerX) * scale + this.viewWidth / 2,
      this.viewHeight / 2 - (wy - centerY) * scale,
    ];
  }

  toWorld(sx: number, sy: number): [number, number] {
    const { centerX, centerY, scale } = this.state;
    return [
      (sx - this.viewWidth / 2) / scale + centerX,
      centerY - (sy - this.viewHeight / 2) / scale,
    ];
  }

  pan(dxPixels: number, dyPixels: number): void {
    this.state.centerX -= dxPixels / this.state.scale;
    this.state.centerY += dyPixels / this.state.scale;
  }

  /** Zoom by a factor keeping the world point under the cursor fixed. */
  zoomAt(sx: number, sy: number, factor: number): void {
    const [wx, wy] = this.toWorld(sx, sy);
    this.state.scale = Math.min(Math.max(this.state.scale * factor, 10), 2000);
    const [nx, ny] = this.toWorld(sx, sy);
    this.state.centerX += wx - nx;
    this.state.centerY += wy - ny;
  }
}
