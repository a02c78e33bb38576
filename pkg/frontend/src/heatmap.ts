/** Canvas heatmap renderer: raster the map, then overlay AP markers. */

import { ColorScale, valueToRgb } from "./colormap.js";
import { GridGeometry, cellToPixel } from "./transform.js";

export interface Marker {
  row: number;
  col: number;
  kind: "ap" | "candidate";
  label?: string;
}

export function renderHeatmap(
  canvas: HTMLCanvasElement,
  valuesDb: number[],
  widthCells: number,
  scale: ColorScale,
  markers: Marker[] = [],
): void {
  if (valuesDb.length !== widthCells * widthCells) {
    throw new Error(
      `expected ${widthCells * widthCells} values, got ${valuesDb.length}`,
    );
  }
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");

  // draw one pixel per cell on an offscreen raster, then scale up
  const raster = new OffscreenCanvas(widthCells, widthCells);
  const rctx = raster.getContext("2d")!;
  const img = rctx.createImageData(widthCells, widthCells);
  for (let i = 0; i < valuesDb.length; i++) {
    const [r, g, b] = valueToRgb(scale, valuesDb[i]);
    img.data[4 * i] = r;
    img.data[4 * i + 1] = g;
    img.data[4 * i + 2] = b;
    img.data[4 * i + 3] = 255;
  }
  rctx.putImageData(img, 0, 0);

  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(raster, 0, 0, canvas.width, canvas.height);

  const geom: GridGeometry = { widthCells, canvasSize: canvas.width };
  for (const marker of markers) {
    const { x, y } = cellToPixel(geom, marker);
    ctx.beginPath();
    ctx.arc(x, y, marker.kind === "ap" ? 5 : 7, 0, 2 * Math.PI);
    ctx.strokeStyle = marker.kind === "ap" ? "#ffffff" : "#00e5ff";
    ctx.lineWidth = 2;
    ctx.stroke();
    if (marker.label) {
      ctx.font = "12px sans-serif";
      ctx.fillStyle = "#ffffff";
      ctx.fillText(marker.label, x + 8, y - 8);
    }
  }
}
