import { writeFileSync } from 'node:fs';
import { parseArgs } from 'node:util';

import { loadCheckpoint } from './checkpoint';
import { documentToJson, exportModel, ExportError } from './export';

const USAGE = 'usage: export-mlp --in path/to/model.json --out net.json';

async function main(): Promise<number> {
  let values: { in?: string; out?: string };
  try {
    values = parseArgs({
      options: {
        in: { type: 'string' },
        out: { type: 'string' },
      },
    }).values;
  } catch (err) {
    console.error((err as Error).message);
    console.error(USAGE);
    return 1;
  }
  if (!values.in || !values.out) {
    console.error(USAGE);
    return 1;
  }
  const model = await loadCheckpoint(values.in);
  const doc = exportModel(model);
  writeFileSync(values.out, documentToJson(doc));
  console.error(`exported ${doc.layers.length} dense layers (input_dim=${doc.input_dim}) to ${values.out}`);
  return 0;
}

main()
  .then((code) => {
    process.exitCode = code;
  })
  .catch((err) => {
    if (err instanceof ExportError) {
      console.error(`export failed: ${err.message}`);
    } else {
      console.error(String(err));
    }
    process.exitCode = 1;
  });
