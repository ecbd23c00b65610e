import { readFileSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { InputError } from "./csv.js";

export type FigureKind = "esd-overlay" | "error-curves";

export interface FigureStyle {
    bins?: number;
    xlabel?: string;
    ylabel?: string;
    title?: string;
}

export interface FigureSpec {
    kind: FigureKind;
    inputs: Record<string, string>;
    output: string;
    style: FigureStyle;
}

const INPUT_KEYS: Record<FigureKind, string[]> = {
    "esd-overlay": ["esd", "theory"],
    "error-curves": ["sweep"],
};

function fail(where: string, detail: string): never {
    throw new Error(`invalid spec at ${where}: ${detail}`);
}

/** Validate a parsed spec object; paths become absolute relative to base. */
export function validateSpec(raw: unknown, base: string): FigureSpec {
    if (typeof raw !== "object" || raw === null || Array.isArray(raw)) fail("$", "expected an object");
    const o = raw as Record<string, unknown>;
    for (const k of Object.keys(o)) {
        if (!["kind", "inputs", "output", "style"].includes(k)) fail(`$.${k}`, "unknown key");
    }
    const kind = o.kind;
    if (kind !== "esd-overlay" && kind !== "error-curves") {
        fail("$.kind", "expected 'esd-overlay' or 'error-curves'");
    }
    if (typeof o.output !== "string" || o.output === "") fail("$.output", "expected a nonempty path");
    if (typeof o.inputs !== "object" || o.inputs === null) fail("$.inputs", "expected an object");
    const inputs = o.inputs as Record<string, unknown>;
    const want = INPUT_KEYS[kind];
    for (const k of Object.keys(inputs)) {
        if (!want.includes(k)) fail(`$.inputs.${k}`, `unknown input for kind ${kind}`);
    }
    const resolved: Record<string, string> = {};
    for (const k of want) {
        const v = inputs[k];
        if (typeof v !== "string" || v === "") fail(`$.inputs.${k}`, "expected a nonempty path");
        resolved[k] = resolve(base, v);
    }
    const style: FigureStyle = {};
    if (o.style !== undefined) {
        if (typeof o.style !== "object" || o.style === null) fail("$.style", "expected an object");
        const s = o.style as Record<string, unknown>;
        for (const k of Object.keys(s)) {
            if (!["bins", "xlabel", "ylabel", "title"].includes(k)) fail(`$.style.${k}`, "unknown key");
        }
        if (s.bins !== undefined) {
            if (typeof s.bins !== "number" || !Number.isInteger(s.bins) || s.bins < 1) {
                fail("$.style.bins", "expected a positive integer");
            }
            style.bins = s.bins;
        }
        for (const k of ["xlabel", "ylabel", "title"] as const) {
            if (s[k] !== undefined) {
                if (typeof s[k] !== "string") fail(`$.style.${k}`, "expected a string");
                style[k] = s[k] as string;
            }
        }
    }
    return { kind, inputs: resolved, output: resolve(base, o.output), style };
}

/** Read and validate a spec file; relative paths resolve against its folder. */
export function loadSpec(path: string): FigureSpec {
    let text: string;
    try {
        text = readFileSync(path, "utf8");
    } catch {
        throw new InputError(path, "cannot read file");
    }
    let raw: unknown;
    try {
        raw = JSON.parse(text);
    } catch (e) {
        throw new InputError(path, `not valid JSON: ${(e as Error).message}`);
    }
    try {
        return validateSpec(raw, dirname(resolve(path)));
    } catch (e) {
        throw new InputError(path, (e as Error).message);
    }
}
