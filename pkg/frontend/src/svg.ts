/** Minimal deterministic SVG scene builder (no DOM, no dependencies). */

const fmt = (v: number): string => {
  if (!Number.isFinite(v)) return "0";
  return Number(v.toPrecision(6)).toString();
};

export interface Mapper {
  sx(x: number): number;
  sy(y: number): number;
}

export function makeMapper(
  xmin: number, xmax: number, ymin: number, ymax: number,
  width: number, height: number, margin: number,
): Mapper {
  const dx = xmax - xmin || 1;
  const dy = ymax - ymin || 1;
  return {
    sx: (x) => margin + ((x - xmin) / dx) * (width - 2 * margin),
    sy: (y) => height - margin - ((y - ymin) / dy) * (height - 2 * margin),
  };
}

export class Svg {
  private parts: string[] = [];

  constructor(public readonly width: number, public readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}">`,
      `<rect x="0" y="0" width="${width}" height="${height}" fill="white"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "black", strokeWidth = 1, dash = ""): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
      `stroke="${stroke}" stroke-width="${strokeWidth}"${d}/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke = "black", strokeWidth = 1.5, dash = ""): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${strokeWidth}"${d}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, stroke = "black", fill = "none", strokeWidth = 1): void {
    this.parts.push(
      `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(Math.max(r, 0))}" ` +
      `stroke="${stroke}" fill="${fill}" stroke-width="${strokeWidth}"/>`,
    );
  }

  text(x: number, y: number, s: string, size = 12, fill = "black"): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" ` +
      `font-family="sans-serif" fill="${fill}">${s}</text>`,
    );
  }

  toString(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function drawFrame(
  svg: Svg, mapper: Mapper,
  xmin: number, xmax: number, ymin: number, ymax: number,
  xlabel: string, ylabel: string,
): void {
  svg.line(mapper.sx(xmin), mapper.sy(ymin), mapper.sx(xmax), mapper.sy(ymin), "#444");
  svg.line(mapper.sx(xmin), mapper.sy(ymin), mapper.sx(xmin), mapper.sy(ymax), "#444");
  const nTicks = 5;
  for (let i = 0; i <= nTicks; i++) {
    const x = xmin + ((xmax - xmin) * i) / nTicks;
    const y = ymin + ((ymax - ymin) * i) / nTicks;
    svg.line(mapper.sx(x), mapper.sy(ymin), mapper.sx(x), mapper.sy(ymin) + 4, "#444");
    svg.text(mapper.sx(x) - 10, mapper.sy(ymin) + 16, x.toPrecision(3), 10, "#444");
    svg.line(mapper.sx(xmin) - 4, mapper.sy(y), mapper.sx(xmin), mapper.sy(y), "#444");
    svg.text(mapper.sx(xmin) - 38, mapper.sy(y) + 4, y.toPrecision(3), 10, "#444");
  }
  svg.text(mapper.sx((xmin + xmax) / 2), svg.height - 6, xlabel, 12, "#111");
  svg.text(8, mapper.sy((ymin + ymax) / 2), ylabel, 12, "#111");
}
