import { basename } from "node:path";
import { num, readSchema } from "./csv.js";
import { parseArgs, runPlot } from "./cli.js";
import { Frame, Svg, sx, sy } from "./svg.js";

// Binned 2D counts over (stepwise belief, episode final return), one panel
// per input CSV so different kernels can sit side by side.

const USAGE =
  "usage: plot_reward_belief_hist --in belief_hist.csv[,more.csv...] --out image.svg";

const COLUMNS = ["belief_lo", "belief_hi", "return_lo", "return_hi", "count"];

runPlot(() => {
  const args = parseArgs(process.argv.slice(2), USAGE);
  const panels = args.inputs.map((path) => ({
    name: basename(path, ".csv"),
    rows: readSchema(path, COLUMNS),
  }));

  const panelW = 300;
  const panelH = 240;
  const gap = 56;
  const svg = new Svg(gap + panels.length * (panelW + gap), panelH + 72);

  panels.forEach((panel, i) => {
    const rows = panel.rows;
    const frame: Frame = {
      x0: Math.min(...rows.map((r) => num(r, "belief_lo"))),
      x1: Math.max(...rows.map((r) => num(r, "belief_hi"))),
      y0: Math.min(...rows.map((r) => num(r, "return_lo"))),
      y1: Math.max(...rows.map((r) => num(r, "return_hi"))),
      left: gap + i * (panelW + gap),
      top: 28,
      width: panelW,
      height: panelH,
    };
    const peak = Math.max(1, ...rows.map((r) => num(r, "count")));
    svg.frameBox(frame, panel.name, "belief of state 0", "episode return");
    for (const row of rows) {
      const count = num(row, "count");
      if (count <= 0) continue;
      const x = sx(frame, num(row, "belief_lo"));
      const y = sy(frame, num(row, "return_hi"));
      const w = sx(frame, num(row, "belief_hi")) - x;
      const h = sy(frame, num(row, "return_lo")) - y;
      svg.rect(x, y, w, h, "#b91c1c", Math.max(0.08, count / peak));
    }
  });
  svg.save(args.out);
  console.log(`wrote ${args.out} (${panels.length} panel(s))`);
});
