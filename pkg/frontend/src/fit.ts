export interface LineFit {
  slope: number;
  intercept: number;
  rms: number;
}

/** Least-squares line y = slope x + intercept with RMS residual. */
export function fitLine(x: number[], y: number[]): LineFit {
  const n = x.length;
  if (n < 2) throw new Error('need at least two points to fit a line');
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx === 0) throw new Error('degenerate abscissae');
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let ss = 0;
  for (let i = 0; i < n; i++) {
    const r = y[i] - (slope * x[i] + intercept);
    ss += r * r;
  }
  return { slope, intercept, rms: Math.sqrt(ss / n) };
}

/** Log-log slope of y against x (both must be positive). */
export function logLogSlope(x: number[], y: number[]): LineFit {
  const lx = x.map((v) => {
    if (v <= 0) throw new Error('log-log fit needs positive x values');
    return Math.log(v);
  });
  const ly = y.map((v) => {
    if (v <= 0) throw new Error('log-log fit needs positive y values');
    return Math.log(v);
  });
  return fitLine(lx, ly);
}
