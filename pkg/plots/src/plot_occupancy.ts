import { readFileSync } from "node:fs";
import { basename } from "node:path";
import { num, readSchema } from "./csv.js";
import { fail, parseArgs, runPlot } from "./cli.js";
import { Svg } from "./svg.js";

// Mean visit counts per grid cell, optionally overlaid with the map's
// start cell, rock digits and exit strip. Panels per input CSV.

const USAGE =
  "usage: plot_occupancy --in occupancy.csv[,more.csv...] --out image.svg [--map grid.txt]";

interface MapInfo {
  width: number;
  height: number;
  start?: [number, number];
  rocks: Array<[number, number, string]>;
}

function parseMap(path: string): MapInfo {
  const lines = readFileSync(path, "utf8")
    .split(/\r?\n/)
    .filter((l) => l.trim().length > 0);
  const height = lines.length;
  const info: MapInfo = { width: 0, height, rocks: [] };
  lines.forEach((line, row) => {
    const y = height - 1 - row;
    [...line].forEach((ch, x) => {
      if (ch === "G") {
        info.width = info.width || x;
      } else if (ch === "S") {
        info.start = [x, y];
      } else if (/[0-9]/.test(ch)) {
        info.rocks.push([x, y, ch]);
      }
    });
  });
  if (!info.width) {
    info.width = Math.max(...lines.map((l) => l.length));
  }
  return info;
}

runPlot(() => {
  const args = parseArgs(process.argv.slice(2), USAGE);
  const map = args.map ? parseMap(args.map) : undefined;
  const cell = 34;
  const gap = 52;

  const panels = args.inputs.map((path) => {
    const rows = readSchema(path, ["x", "y", "mean_visits"]);
    const width = Math.max(...rows.map((r) => num(r, "x"))) + 1;
    const height = Math.max(...rows.map((r) => num(r, "y"))) + 1;
    if (map && (width !== map.width || height !== map.height)) {
      fail(
        `${path}: grid ${width}x${height} does not match map ` +
          `${map.width}x${map.height}`,
      );
    }
    return { name: basename(path, ".csv"), rows, width, height };
  });

  const panelW = Math.max(...panels.map((p) => p.width)) * cell;
  const panelH = Math.max(...panels.map((p) => p.height)) * cell;
  const svg = new Svg(gap + panels.length * (panelW + cell + gap), panelH + 72);

  panels.forEach((panel, i) => {
    const left = gap + i * (panelW + cell + gap);
    const top = 30;
    const peak = Math.max(1e-9, ...panel.rows.map((r) => num(r, "mean_visits")));
    svg.text(left + panelW / 2, top - 10, panel.name, 13, "middle");
    for (const row of panel.rows) {
      const x = num(row, "x");
      const y = num(row, "y");
      const visits = num(row, "mean_visits");
      const px = left + x * cell;
      const py = top + (panel.height - 1 - y) * cell;
      svg.rect(px, py, cell, cell, "#1d4ed8", visits / peak);
      svg.raw(
        `<rect x="${px}" y="${py}" width="${cell}" height="${cell}" ` +
          `fill="none" stroke="#d1d5db" stroke-width="0.5"/>`,
      );
    }
    // exit strip just east of the grid
    svg.rect(left + panel.width * cell, top, cell, panel.height * cell, "#86efac", 0.7);
    svg.text(left + panel.width * cell + cell / 2, top + panelH / 2, "G", 12, "middle");
    if (map) {
      for (const [x, y, label] of map.rocks) {
        svg.text(
          left + x * cell + cell / 2,
          top + (panel.height - 1 - y) * cell + cell / 2 + 4,
          label,
          12,
          "middle",
          "#111",
        );
      }
      if (map.start) {
        const [x, y] = map.start;
        svg.text(
          left + x * cell + cell / 2,
          top + (panel.height - 1 - y) * cell + cell / 2 + 4,
          "S",
          12,
          "middle",
          "#b91c1c",
        );
      }
    }
  });
  svg.save(args.out);
  console.log(`wrote ${args.out} (${panels.length} panel(s))`);
});
