#!/usr/bin/env node
// Thin clingo-compatible wrapper around the clingo-wasm build: reads an
// ASP program from stdin (or files), passes the requested model count
// and options through, and prints the JSON (--outf=2 style) result.
//
// Exit codes follow clingo: 10 SAT, 20 UNSAT, 30 SAT with the search
// space exhausted or optimum found, 65 on errors.
"use strict";

const fs = require("fs");

function readStdin() {
  try {
    return fs.readFileSync(0, "utf8");
  } catch (e) {
    return "";
  }
}

async function main() {
  const argv = process.argv.slice(2);
  let models = 0;
  const options = [];
  const files = [];
  for (const arg of argv) {
    if (/^\d+$/.test(arg)) {
      models = parseInt(arg, 10);
    } else if (arg === "-") {
      files.push("-");
    } else if (arg.startsWith("--outf")) {
      // JSON output is the only mode.
    } else if (arg.startsWith("--")) {
      options.push(arg);
    } else {
      files.push(arg);
    }
  }
  let program = "";
  for (const f of files) {
    program += f === "-" ? readStdin() : fs.readFileSync(f, "utf8");
    program += "\n";
  }
  if (files.length === 0) {
    program = readStdin();
  }

  // The wasm module banners on stdout during initialization; keep the
  // stream clean for the JSON result.
  const realWrite = process.stdout.write.bind(process.stdout);
  process.stdout.write = (chunk, ...rest) => {
    process.stderr.write(chunk, ...rest);
    return true;
  };
  const clingo = require("clingo-wasm");
  await clingo.init();
  const result = await clingo.run(program, models, options);
  process.stdout.write = realWrite;
  console.log(JSON.stringify(result));
  // Exit via exitCode so the pipe drains: process.exit truncates
  // pending stdout writes at the pipe buffer size.
  if (result.Result === "ERROR") {
    process.exitCode = 65;
  } else if (result.Result === "UNSATISFIABLE") {
    process.exitCode = 20;
  } else {
    const exhausted =
      result.Result === "OPTIMUM FOUND" ||
      (result.Models && result.Models.More === "no");
    process.exitCode = exhausted ? 30 : 10;
  }
}

main().catch((e) => {
  console.error(String(e && e.stack ? e.stack : e));
  process.exitCode = 65;
});
