import { Table, column, readTable } from './csv';
import { logLogSlope } from './fit';
import { Panel, document as svgDocument } from './svg';

export const SCHEMAS: Record<string, string[]> = {
  decay: ['eps', 't', 'norm_L2', 'norm_Hk', 'norm_HypEps', 'norm_HypPerp'],
  dispersion: ['zeta', 'branch', 're_lambda', 'im_lambda'],
  convergence: ['eps', 'err_timeavg', 'err_L2t', 'err_sup'],
};

export interface RenderResult {
  svg: string;
  /** fitted log-log slopes for the convergence kind, keyed by error column */
  slopes?: Record<string, number>;
}

function groupBy(keys: number[]): Map<number, number[]> {
  const groups = new Map<number, number[]>();
  keys.forEach((k, i) => {
    const g = groups.get(k);
    if (g) g.push(i);
    else groups.set(k, [i]);
  });
  return groups;
}

/** Decay curves: one log-scale norm trace per eps value. */
export function renderDecay(table: Table): RenderResult {
  const eps = column(table, 'eps');
  const t = column(table, 't');
  const norm = column(table, 'norm_HypEps');
  const panel = new Panel(
    {
      x: 70, y: 40, width: 500, height: 340,
      xLabel: 't', yLabel: 'distorted norm', xScale: 'linear', yScale: 'log',
      title: 'decay of the eps-weighted norm',
    },
    t, norm.filter((v) => v > 0),
  );
  let series = 0;
  for (const [epsVal, idx] of groupBy(eps)) {
    panel.polyline(idx.map((i) => t[i]), idx.map((i) => norm[i]), series,
      `eps = ${epsVal}`);
    series++;
  }
  return { svg: svgDocument(640, 440, panel.render()) };
}

/** Dispersion relations: Im lambda vs zeta and Re lambda vs zeta^2 panels. */
export function renderDispersion(table: Table): RenderResult {
  const zeta = column(table, 'zeta');
  const branch = column(table, 'branch');
  const re = column(table, 're_lambda');
  const im = column(table, 'im_lambda');
  const imPanel = new Panel(
    {
      x: 70, y: 40, width: 380, height: 320,
      xLabel: 'zeta', yLabel: 'Im lambda', xScale: 'linear', yScale: 'linear',
      title: 'oscillation frequencies',
    },
    zeta, im,
  );
  const rePanel = new Panel(
    {
      x: 540, y: 40, width: 380, height: 320,
      xLabel: 'zeta^2', yLabel: 'Re lambda', xScale: 'linear', yScale: 'linear',
      title: 'damping rates',
    },
    zeta.map((z) => z * z), re,
  );
  let series = 0;
  for (const [b, idx] of groupBy(branch)) {
    const zs = idx.map((i) => zeta[i]);
    imPanel.polyline(zs, idx.map((i) => im[i]), series, `branch ${b}`);
    imPanel.markers(zs, idx.map((i) => im[i]), series);
    rePanel.polyline(zs.map((z) => z * z), idx.map((i) => re[i]), series);
    rePanel.markers(zs.map((z) => z * z), idx.map((i) => re[i]), series);
    series++;
  }
  const body = imPanel.render() + '\n' + rePanel.render();
  return { svg: svgDocument(990, 430, body) };
}

/** Log-log convergence with fitted slopes and reference slopes 1/2 and 1. */
export function renderConvergence(table: Table, annotations = true): RenderResult {
  const eps = column(table, 'eps');
  const errCols = ['err_timeavg', 'err_L2t', 'err_sup'];
  const all: number[] = [];
  for (const c of errCols) all.push(...column(table, c).filter((v) => v > 0));
  const panel = new Panel(
    {
      x: 80, y: 40, width: 480, height: 360,
      xLabel: 'eps', yLabel: 'error', xScale: 'log', yScale: 'log',
      title: 'convergence toward the incompressible limit',
    },
    eps, all,
  );
  const slopes: Record<string, number> = {};
  let series = 0;
  let row = 0;
  for (const colName of errCols) {
    const err = column(table, colName);
    panel.polyline(eps, err, series, colName);
    panel.markers(eps, err, series);
    const positive = eps.map((e, i) => [e, err[i]]).filter(([, v]) => v > 0);
    if (positive.length >= 2) {
      const fit = logLogSlope(positive.map((p) => p[0]), positive.map((p) => p[1]));
      slopes[colName] = fit.slope;
      if (annotations) {
        panel.annotation(`${colName}: fitted slope ${fit.slope.toFixed(2)}`, row);
        row++;
      }
    }
    series++;
  }
  // reference slopes through the last point of the first error column
  const e0 = Math.min(...eps);
  const e1 = Math.max(...eps);
  const anchorCol = column(table, 'err_timeavg');
  const anchor = anchorCol[eps.indexOf(e1)];
  if (anchor > 0) {
    for (const [refSlope, series2] of [[0.5, 4], [1.0, 5]] as const) {
      const ys = [anchor * Math.pow(e0 / e1, refSlope), anchor];
      panel.polyline([e0, e1], ys, series2, `slope ${refSlope}`, true);
    }
  }
  return { svg: svgDocument(640, 460, panel.render()), slopes };
}

export function render(kind: string, csvPath: string,
                       annotations = true): RenderResult {
  const schema = SCHEMAS[kind];
  if (!schema) {
    throw new Error(`unknown figure kind '${kind}' (expected decay, dispersion or convergence)`);
  }
  const table = readTable(csvPath, schema);
  if (kind === 'decay') return renderDecay(table);
  if (kind === 'dispersion') return renderDispersion(table);
  return renderConvergence(table, annotations);
}
