/**
 * Minimal deterministic SVG scene builder: fixed canvas, fixed styles,
 * numbers printed with fixed precision, no timestamps or generator tags,
 * so renders are byte-reproducible for identical inputs.
 */

export type Scale = 'linear' | 'log';

export interface PanelSpec {
  x: number;
  y: number;
  width: number;
  height: number;
  xLabel: string;
  yLabel: string;
  xScale: Scale;
  yScale: Scale;
  title?: string;
}

const PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b'];

function fmt(v: number): string {
  return v.toFixed(2);
}

function niceTicks(lo: number, hi: number, scale: Scale): number[] {
  if (scale === 'log') {
    const ticks: number[] = [];
    const eLo = Math.ceil(Math.log10(lo) - 1e-9);
    const eHi = Math.floor(Math.log10(hi) + 1e-9);
    for (let e = eLo; e <= eHi; e++) ticks.push(Math.pow(10, e));
    if (ticks.length === 0) ticks.push(lo, hi);
    return ticks;
  }
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / 4)));
  const mult = span / step > 8 ? 2 : 1;
  const ticks: number[] = [];
  const start = Math.ceil(lo / (step * mult)) * step * mult;
  for (let v = start; v <= hi + 1e-12 * span; v += step * mult) ticks.push(v);
  return ticks;
}

export class Panel {
  private spec: PanelSpec;
  private xLo: number;
  private xHi: number;
  private yLo: number;
  private yHi: number;
  private parts: string[] = [];
  private legendCount = 0;

  constructor(spec: PanelSpec, xs: number[], ys: number[]) {
    this.spec = spec;
    const fx = spec.xScale === 'log' ? xs.filter((v) => v > 0) : xs;
    const fy = spec.yScale === 'log' ? ys.filter((v) => v > 0) : ys;
    if (fx.length === 0 || fy.length === 0) {
      throw new Error('panel has no plottable data in range');
    }
    this.xLo = Math.min(...fx);
    this.xHi = Math.max(...fx);
    this.yLo = Math.min(...fy);
    this.yHi = Math.max(...fy);
    if (this.xLo === this.xHi) {
      this.xLo -= 0.5;
      this.xHi += 0.5;
    }
    if (this.yLo === this.yHi) {
      this.yLo = spec.yScale === 'log' ? this.yLo / 2 : this.yLo - 0.5;
      this.yHi = spec.yScale === 'log' ? this.yHi * 2 : this.yHi + 0.5;
    }
  }

  private sx(v: number): number {
    const { x, width, xScale } = this.spec;
    const t = xScale === 'log'
      ? (Math.log(v) - Math.log(this.xLo)) / (Math.log(this.xHi) - Math.log(this.xLo))
      : (v - this.xLo) / (this.xHi - this.xLo);
    return x + t * width;
  }

  private sy(v: number): number {
    const { y, height, yScale } = this.spec;
    const t = yScale === 'log'
      ? (Math.log(v) - Math.log(this.yLo)) / (Math.log(this.yHi) - Math.log(this.yLo))
      : (v - this.yLo) / (this.yHi - this.yLo);
    return y + height - t * height;
  }

  polyline(xs: number[], ys: number[], seriesIndex: number, label?: string,
           dashed = false): void {
    const pts: string[] = [];
    for (let i = 0; i < xs.length; i++) {
      if (this.spec.yScale === 'log' && ys[i] <= 0) continue;
      if (this.spec.xScale === 'log' && xs[i] <= 0) continue;
      pts.push(`${fmt(this.sx(xs[i]))},${fmt(this.sy(ys[i]))}`);
    }
    const color = PALETTE[seriesIndex % PALETTE.length];
    const dash = dashed ? ' stroke-dasharray="6,4"' : '';
    this.parts.push(
      `<polyline fill="none" stroke="${color}" stroke-width="1.5"${dash} points="${pts.join(' ')}"/>`);
    if (label !== undefined) {
      const ly = this.spec.y + 14 + 14 * this.legendCount;
      const lx = this.spec.x + this.spec.width - 8;
      this.parts.push(
        `<text x="${fmt(lx)}" y="${fmt(ly)}" font-size="11" text-anchor="end" fill="${color}">${label}</text>`);
      this.legendCount++;
    }
  }

  markers(xs: number[], ys: number[], seriesIndex: number): void {
    const color = PALETTE[seriesIndex % PALETTE.length];
    for (let i = 0; i < xs.length; i++) {
      if (this.spec.yScale === 'log' && ys[i] <= 0) continue;
      this.parts.push(
        `<circle cx="${fmt(this.sx(xs[i]))}" cy="${fmt(this.sy(ys[i]))}" r="2.5" fill="${color}"/>`);
    }
  }

  annotation(text: string, row: number): void {
    const x = this.spec.x + 8;
    const y = this.spec.y + this.spec.height - 8 - 14 * row;
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="11" fill="#333333">${text}</text>`);
  }

  render(): string {
    const { x, y, width, height, xLabel, yLabel, title } = this.spec;
    const out: string[] = [];
    out.push(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(width)}" height="${fmt(height)}" fill="none" stroke="#444444"/>`);
    for (const t of niceTicks(this.xLo, this.xHi, this.spec.xScale)) {
      const px = this.sx(t);
      out.push(`<line x1="${fmt(px)}" y1="${fmt(y + height)}" x2="${fmt(px)}" y2="${fmt(y + height + 4)}" stroke="#444444"/>`);
      out.push(`<text x="${fmt(px)}" y="${fmt(y + height + 16)}" font-size="10" text-anchor="middle">${t.toPrecision(3)}</text>`);
    }
    for (const t of niceTicks(this.yLo, this.yHi, this.spec.yScale)) {
      const py = this.sy(t);
      out.push(`<line x1="${fmt(x - 4)}" y1="${fmt(py)}" x2="${fmt(x)}" y2="${fmt(py)}" stroke="#444444"/>`);
      out.push(`<text x="${fmt(x - 6)}" y="${fmt(py + 3)}" font-size="10" text-anchor="end">${t.toPrecision(2)}</text>`);
    }
    out.push(`<text x="${fmt(x + width / 2)}" y="${fmt(y + height + 32)}" font-size="12" text-anchor="middle">${xLabel}</text>`);
    out.push(`<text x="${fmt(x - 44)}" y="${fmt(y + height / 2)}" font-size="12" text-anchor="middle" transform="rotate(-90 ${fmt(x - 44)} ${fmt(y + height / 2)})">${yLabel}</text>`);
    if (title) {
      out.push(`<text x="${fmt(x + width / 2)}" y="${fmt(y - 8)}" font-size="13" text-anchor="middle">${title}</text>`);
    }
    return out.join('\n') + '\n' + this.parts.join('\n');
  }
}

export function document(width: number, height: number, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    '<rect width="100%" height="100%" fill="#ffffff"/>',
    body,
    '</svg>',
    '',
  ].join('\n');
}
