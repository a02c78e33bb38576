/** Canvas pixel <-> grid cell transforms for a square W x W map. */

export interface GridGeometry {
  widthCells: number;
  canvasSize: number; // square canvas edge in CSS pixels
}

export interface Cell {
  row: number;
  col: number;
}

export function cellSizePx(geom: GridGeometry): number {
  return geom.canvasSize / geom.widthCells;
}

/** Pixel position (canvas coords) to the grid cell containing it. */
export function pixelToCell(geom: GridGeometry, x: number, y: number): Cell | null {
  if (x < 0 || y < 0 || x >= geom.canvasSize || y >= geom.canvasSize) {
    return null;
  }
  const s = cellSizePx(geom);
  const col = Math.min(geom.widthCells - 1, Math.floor(x / s));
  const row = Math.min(geom.widthCells - 1, Math.floor(y / s));
  return { row, col };
}

/** Center pixel of a cell; inverse of pixelToCell on cell centers. */
export function cellToPixel(geom: GridGeometry, cell: Cell): { x: number; y: number } {
  const s = cellSizePx(geom);
  return { x: (cell.col + 0.5) * s, y: (cell.row + 0.5) * s };
}
