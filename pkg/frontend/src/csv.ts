import { readFileSync } from "node:fs";
import Papa from "papaparse";

/** Raised for any unreadable or contract-violating input; carries the path. */
export class InputError extends Error {
    constructor(public readonly path: string, detail: string) {
        super(`${path}: ${detail}`);
        this.name = "InputError";
    }
}

function parseRows(path: string): string[][] {
    let text: string;
    try {
        text = readFileSync(path, "utf8");
    } catch {
        throw new InputError(path, "cannot read file");
    }
    const parsed = Papa.parse<string[]>(text, { delimiter: ",", skipEmptyLines: true });
    if (parsed.errors.length > 0) {
        throw new InputError(path, `malformed CSV: ${parsed.errors[0]!.message}`);
    }
    if (parsed.data.length === 0) {
        throw new InputError(path, "empty file");
    }
    return parsed.data;
}

function checkHeader(path: string, got: string[], want: readonly string[]) {
    if (got.length !== want.length || want.some((c, i) => got[i] !== c)) {
        throw new InputError(path, `expected header '${want.join(",")}', got '${got.join(",")}'`);
    }
}

function toNumber(path: string, cell: string, column: string, row: number): number {
    const v = Number(cell);
    if (cell.trim() === "" || !Number.isFinite(v)) {
        throw new InputError(path, `non-numeric value '${cell}' in column ${column}, data row ${row}`);
    }
    return v;
}

/** Single-column eigenvalue list (esd.csv). */
export function readEigenvalues(path: string): number[] {
    const rows = parseRows(path);
    checkHeader(path, rows[0]!, ["eigenvalue"]);
    return rows.slice(1).map((r, i) => {
        if (r.length !== 1) throw new InputError(path, `expected 1 field in data row ${i}, got ${r.length}`);
        return toNumber(path, r[0]!, "eigenvalue", i);
    });
}

export interface Curve {
    x: number[];
    density: number[];
}

/** Two-column theory density (theory.csv / law.csv). */
export function readDensityCurve(path: string): Curve {
    const rows = parseRows(path);
    checkHeader(path, rows[0]!, ["x", "density"]);
    const x: number[] = [];
    const density: number[] = [];
    rows.slice(1).forEach((r, i) => {
        if (r.length !== 2) throw new InputError(path, `expected 2 fields in data row ${i}, got ${r.length}`);
        x.push(toNumber(path, r[0]!, "x", i));
        density.push(toNumber(path, r[1]!, "density", i));
    });
    if (x.length < 2) throw new InputError(path, "density curve needs at least 2 points");
    for (let i = 1; i < x.length; i++) {
        if (x[i]! <= x[i - 1]!) throw new InputError(path, `x must increase strictly (data row ${i})`);
    }
    return { x, density };
}

export const SWEEP_COLUMNS = [
    "n", "d0", "d1", "lambda", "kernel_mode", "seed",
    "train_rf", "train_k", "test_rf", "test_k",
    "train_asym", "test_asym", "lambda_eff",
] as const;

export interface SweepRow {
    n: number;
    d1: number;
    seed: number;
    test_rf: number;
    test_asym: number;
}

/** Regression sweep records (regress.csv); only the plotted fields are kept. */
export function readSweep(path: string): SweepRow[] {
    const rows = parseRows(path);
    checkHeader(path, rows[0]!, SWEEP_COLUMNS);
    const idx = (c: string) => SWEEP_COLUMNS.indexOf(c as (typeof SWEEP_COLUMNS)[number]);
    return rows.slice(1).map((r, i) => {
        if (r.length !== SWEEP_COLUMNS.length) {
            throw new InputError(path, `expected ${SWEEP_COLUMNS.length} fields in data row ${i}, got ${r.length}`);
        }
        const num = (c: string) => toNumber(path, r[idx(c)]!, c, i);
        return {
            n: num("n"),
            d1: num("d1"),
            seed: num("seed"),
            test_rf: num("test_rf"),
            test_asym: num("test_asym"),
        };
    });
}
