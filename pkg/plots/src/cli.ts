export interface PlotArgs {
  inputs: string[];
  out: string;
  map?: string;
}

/** Parse --in a.csv[,b.csv] --out image.svg [--map grid.txt]. */
export function parseArgs(argv: string[], usage: string): PlotArgs {
  const args: Partial<PlotArgs> = {};
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--in":
        args.inputs = (argv[++i] ?? "").split(",").filter(Boolean);
        break;
      case "--out":
        args.out = argv[++i];
        break;
      case "--map":
        args.map = argv[++i];
        break;
      default:
        fail(`unknown argument ${argv[i]}\n${usage}`);
    }
  }
  if (!args.inputs?.length || !args.out) {
    fail(usage);
  }
  return args as PlotArgs;
}

export function fail(message: string): never {
  console.error(message);
  process.exit(1);
}

/** Run a renderer, converting schema errors into a nonzero exit. */
export function runPlot(render: () => void): void {
  try {
    render();
  } catch (err) {
    fail(err instanceof Error ? err.message : String(err));
  }
}
