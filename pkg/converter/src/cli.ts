#!/usr/bin/env node
/**
 * convert_mano --in MANO_RIGHT.pkl --npc 45 --out mano_right.json
 *              [--fingertips 745,317,444,556,673]
 */

import { convert, DEFAULT_FINGERTIPS } from "./convert.js";

function usage(message?: string): never {
  if (message) console.error(`error: ${message}`);
  console.error(
    "usage: convert_mano --in MANO_RIGHT.pkl --npc {6|45} --out model.json " +
      "[--fingertips i,i,i,i,i]"
  );
  process.exit(message ? 1 : 0);
}

function parseArgs(argv: string[]) {
  let input: string | undefined;
  let output: string | undefined;
  let nPc: 6 | 45 = 45;
  let fingertips = DEFAULT_FINGERTIPS;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) usage(`${arg} expects a value`);
      return argv[++i];
    };
    switch (arg) {
      case "--in":
        input = next();
        break;
      case "--out":
        output = next();
        break;
      case "--npc": {
        const v = Number(next());
        if (v !== 6 && v !== 45) usage("--npc must be 6 or 45");
        nPc = v;
        break;
      }
      case "--fingertips":
        fingertips = next().split(",").map((s) => Number(s.trim()));
        break;
      case "--help":
      case "-h":
        usage();
        break;
      default:
        usage(`unknown argument ${arg}`);
    }
  }
  if (!input) usage("--in is required");
  if (!output) usage("--out is required");
  return { input, output, nPc, fingertips };
}

const { input, output, nPc, fingertips } = parseArgs(process.argv.slice(2));
try {
  const report = convert(input, nPc, output, fingertips);
  console.log(JSON.stringify(report, null, 2));
} catch (err) {
  console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
  process.exit(2);
}
