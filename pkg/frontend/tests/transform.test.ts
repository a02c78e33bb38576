import { describe, expect, it } from "vitest";

import { cellToPixel, pixelToCell, type GridGeometry } from "../src/transform.js";

const GEOM: GridGeometry = { widthCells: 64, canvasSize: 512 };

describe("pixel/cell transforms", () => {
  it("round-trips all four corner cells and the center exactly", () => {
    const w = GEOM.widthCells;
    const cells = [
      { row: 0, col: 0 },
      { row: 0, col: w - 1 },
      { row: w - 1, col: 0 },
      { row: w - 1, col: w - 1 },
      { row: w / 2, col: w / 2 },
    ];
    for (const cell of cells) {
      const px = cellToPixel(GEOM, cell);
      expect(pixelToCell(GEOM, px.x, px.y)).toEqual(cell);
    }
  });

  it("maps the canvas center of a W=64 map to cell (32, 32)", () => {
    expect(pixelToCell(GEOM, 256, 256)).toEqual({ row: 32, col: 32 });
  });

  it("round-trips every cell on a non-integer cell size", () => {
    const geom: GridGeometry = { widthCells: 24, canvasSize: 500 };
    for (let row = 0; row < geom.widthCells; row++) {
      for (let col = 0; col < geom.widthCells; col++) {
        const px = cellToPixel(geom, { row, col });
        expect(pixelToCell(geom, px.x, px.y)).toEqual({ row, col });
      }
    }
  });

  it("rejects positions outside the canvas", () => {
    expect(pixelToCell(GEOM, -1, 10)).toBeNull();
    expect(pixelToCell(GEOM, 10, 512)).toBeNull();
  });

  it("clamps boundary pixels into the last cell", () => {
    expect(pixelToCell(GEOM, 511.999, 511.999)).toEqual({ row: 63, col: 63 });
  });
});
