import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

export interface Frame {
  x0: number; // data-space bounds
  x1: number;
  y0: number;
  y1: number;
  left: number; // pixel-space placement
  top: number;
  width: number;
  height: number;
}

export const PALETTE = [
  "#2563eb", "#dc2626", "#16a34a", "#9333ea", "#ea580c",
  "#0891b2", "#ca8a04", "#db2777", "#4b5563", "#65a30d",
];

export function sx(f: Frame, x: number): number {
  return f.left + ((x - f.x0) / (f.x1 - f.x0 || 1)) * f.width;
}

export function sy(f: Frame, y: number): number {
  return f.top + f.height - ((y - f.y0) / (f.y1 - f.y0 || 1)) * f.height;
}

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    );
  }

  raw(markup: string): void {
    this.parts.push(markup);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1.5): void {
    this.raw(
      `<line x1="${r(x1)}" y1="${r(y1)}" x2="${r(x2)}" y2="${r(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5): void {
    const pts = points.map(([x, y]) => `${r(x)},${r(y)}`).join(" ");
    this.raw(`<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, opacity = 1): void {
    this.raw(
      `<rect x="${r(x)}" y="${r(y)}" width="${r(w)}" height="${r(h)}" ` +
        `fill="${fill}" fill-opacity="${r(opacity)}"/>`,
    );
  }

  text(x: number, y: number, content: string, size = 11, anchor = "start", fill = "#111"): void {
    this.raw(
      `<text x="${r(x)}" y="${r(y)}" font-size="${size}" text-anchor="${anchor}" ` +
        `fill="${fill}">${escapeXml(content)}</text>`,
    );
  }

  frameBox(f: Frame, title: string, xLabel: string, yLabel: string): void {
    this.raw(
      `<rect x="${f.left}" y="${f.top}" width="${f.width}" height="${f.height}" ` +
        `fill="none" stroke="#333" stroke-width="1"/>`,
    );
    this.text(f.left + f.width / 2, f.top - 8, title, 13, "middle");
    this.text(f.left + f.width / 2, f.top + f.height + 28, xLabel, 11, "middle");
    this.text(f.left - 34, f.top + f.height / 2, yLabel, 11, "middle");
    for (const t of [0, 0.5, 1]) {
      const x = f.x0 + t * (f.x1 - f.x0);
      const y = f.y0 + t * (f.y1 - f.y0);
      this.text(sx(f, x), f.top + f.height + 14, fmt(x), 9, "middle", "#555");
      this.text(f.left - 4, sy(f, y) + 3, fmt(y), 9, "end", "#555");
    }
  }

  save(path: string): void {
    this.parts.push("</svg>");
    mkdirSync(dirname(path), { recursive: true });
    writeFileSync(path, this.parts.join("\n"), "utf8");
  }
}

function r(v: number): string {
  return (Math.round(v * 100) / 100).toString();
}

function fmt(v: number): string {
  const a = Math.abs(v);
  if (a >= 100) return v.toFixed(0);
  if (a >= 1) return v.toFixed(1);
  return v.toFixed(2);
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
