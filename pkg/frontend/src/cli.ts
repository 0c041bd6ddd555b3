#!/usr/bin/env node
import { writeFileSync } from 'fs';
import yargs from 'yargs';
import { render } from './figures';

const argv = yargs(process.argv.slice(2))
  .usage('$0 <kind> <csv> -o <img>')
  .command('$0 <kind> <csv>', 'render a figure from a knudsenlab CSV')
  .positional('kind', {
    describe: 'figure kind: decay | dispersion | convergence',
    type: 'string',
  })
  .positional('csv', { describe: 'input CSV path', type: 'string' })
  .option('o', {
    alias: 'output',
    describe: 'output image path (SVG)',
    type: 'string',
    demandOption: true,
  })
  .option('annotations', {
    describe: 'display fitted-slope annotations',
    type: 'boolean',
    default: true,
  })
  .strict()
  .parseSync();

try {
  const result = render(argv.kind as string, argv.csv as string, argv.annotations);
  writeFileSync(argv.o, result.svg);
  if (result.slopes) {
    for (const [name, slope] of Object.entries(result.slopes)) {
      console.log(`${name}: fitted slope ${slope.toFixed(2)}`);
    }
  }
  console.log(`wrote ${argv.o}`);
} catch (err) {
  console.error(String(err instanceof Error ? err.message : err));
  process.exit(1);
}
