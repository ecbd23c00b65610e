#!/usr/bin/env node
import { mkdirSync, realpathSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";
import { pathToFileURL } from "node:url";
import { renderErrorCurves } from "./errorCurves.js";
import { renderEsdOverlay } from "./esdOverlay.js";
import { loadSpec, validateSpec, type FigureSpec } from "./spec.js";

const USAGE = `usage:
  render --spec <spec.json>
  render esd-overlay <esd.csv> <theory.csv> <out.svg> [--bins N] [--title T]
  render error-curves <regress.csv> <out.svg> [--title T]`;

class UsageError extends Error {}

/** Positional shorthand -> the same validated spec a spec.json produces. */
export function specFromArgv(argv: string[]): FigureSpec {
    const positional: string[] = [];
    const style: Record<string, unknown> = {};
    for (let i = 0; i < argv.length; i++) {
        const a = argv[i]!;
        if (a === "--bins" || a === "--title") {
            const v = argv[++i];
            if (v === undefined) throw new UsageError(`${a} needs a value`);
            if (a === "--bins") {
                style.bins = Number(v);
                if (!Number.isInteger(style.bins)) throw new UsageError(`--bins needs an integer, got '${v}'`);
            } else {
                style.title = v;
            }
        } else if (a.startsWith("--")) {
            throw new UsageError(`unknown flag ${a}`);
        } else {
            positional.push(a);
        }
    }
    const kind = positional[0];
    if (kind === "esd-overlay") {
        if (positional.length !== 4) throw new UsageError("esd-overlay needs <esd.csv> <theory.csv> <out.svg>");
        return validateSpec({
            kind, inputs: { esd: positional[1], theory: positional[2] },
            output: positional[3], style,
        }, process.cwd());
    }
    if (kind === "error-curves") {
        if (positional.length !== 3) throw new UsageError("error-curves needs <regress.csv> <out.svg>");
        return validateSpec({
            kind, inputs: { sweep: positional[1] },
            output: positional[2], style,
        }, process.cwd());
    }
    throw new UsageError(kind === undefined ? "no figure kind given" : `unknown figure kind '${kind}'`);
}

export function main(argv: string[]): number {
    try {
        let spec: FigureSpec;
        if (argv[0] === "--spec") {
            if (argv.length !== 2) throw new UsageError("--spec takes exactly one file");
            spec = loadSpec(argv[1]!);
        } else {
            spec = specFromArgv(argv);
        }
        // render fully before touching the output path: failures write nothing
        const svg = spec.kind === "esd-overlay" ? renderEsdOverlay(spec) : renderErrorCurves(spec);
        mkdirSync(dirname(spec.output), { recursive: true });
        writeFileSync(spec.output, svg);
        console.log(`wrote ${spec.output}`);
        return 0;
    } catch (e) {
        console.error(e instanceof Error ? e.message : String(e));
        if (e instanceof UsageError) console.error(USAGE);
        return 1;
    }
}

const isMain = (() => {
    try {
        return import.meta.url === pathToFileURL(realpathSync(process.argv[1] ?? "")).href;
    } catch {
        return false;
    }
})();
if (isMain) process.exit(main(process.argv.slice(2)));
