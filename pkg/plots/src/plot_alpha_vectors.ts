import { basename } from "node:path";
import { num, readSchema } from "./csv.js";
import { parseArgs, runPlot } from "./cli.js";
import { Frame, PALETTE, Svg, sx, sy } from "./svg.js";

// Value hyperplanes over the belief segment: each CSV row (action, v0, v1)
// is the line p -> v0*p + v1*(1-p). One panel per input file, so passing
// baseline and kernel runs side by side gives the multi-experiment figure.

const USAGE = "usage: plot_alpha_vectors --in alpha.csv[,more.csv...] --out image.svg";

interface Alpha {
  action: number;
  v0: number;
  v1: number;
}

function envelope(alphas: Alpha[], p: number): number {
  return Math.max(...alphas.map((a) => a.v0 * p + a.v1 * (1 - p)));
}

function drawPanel(svg: Svg, frame: Frame, alphas: Alpha[], title: string): void {
  svg.frameBox(frame, title, "belief of state 0", "value");
  for (const a of alphas) {
    const color = PALETTE[a.action % PALETTE.length];
    svg.polyline(
      [
        [sx(frame, 0), sy(frame, a.v1)],
        [sx(frame, 1), sy(frame, a.v0)],
      ],
      color,
      1.2,
    );
  }
  const steps = 96;
  const env: Array<[number, number]> = [];
  for (let i = 0; i <= steps; i++) {
    const p = i / steps;
    env.push([sx(frame, p), sy(frame, envelope(alphas, p))]);
  }
  svg.polyline(env, "#111", 2.6);
}

runPlot(() => {
  const args = parseArgs(process.argv.slice(2), USAGE);
  const panels = args.inputs.map((path) => ({
    name: basename(path, ".csv"),
    alphas: readSchema(path, ["action", "v0", "v1"]).map((row) => ({
      action: num(row, "action"),
      v0: num(row, "v0"),
      v1: num(row, "v1"),
    })),
  }));

  const values = panels.flatMap((p) => p.alphas.flatMap((a) => [a.v0, a.v1]));
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const pad = 0.05 * (hi - lo || 1);

  const panelW = 300;
  const panelH = 240;
  const gap = 56;
  const svg = new Svg(gap + panels.length * (panelW + gap), panelH + 96);
  const actions = [...new Set(panels.flatMap((p) => p.alphas.map((a) => a.action)))].sort(
    (a, b) => a - b,
  );
  panels.forEach((panel, i) => {
    const frame: Frame = {
      x0: 0,
      x1: 1,
      y0: lo - pad,
      y1: hi + pad,
      left: gap + i * (panelW + gap),
      top: 28,
      width: panelW,
      height: panelH,
    };
    drawPanel(svg, frame, panel.alphas, panel.name);
  });
  actions.forEach((action, i) => {
    const x = gap + i * 110;
    const y = panelH + 70;
    svg.line(x, y - 4, x + 22, y - 4, PALETTE[action % PALETTE.length], 2);
    svg.text(x + 28, y, `action ${action}`);
  });
  svg.save(args.out);
  console.log(`wrote ${args.out} (${panels.length} panel(s))`);
});
