import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { InputError, readDensityCurve, readEigenvalues, readSweep } from "../src/csv.js";

const FIX = fileURLToPath(new URL("./fixtures", import.meta.url));

function tmpFile(name: string, content: string): string {
    const dir = mkdtempSync(join(tmpdir(), "figcsv-"));
    const p = join(dir, name);
    writeFileSync(p, content);
    return p;
}

describe("readEigenvalues", () => {
    it("reads the fig-law fixture", () => {
        const vals = readEigenvalues(join(FIX, "fig-law", "esd.csv"));
        expect(vals.length).toBeGreaterThan(10);
        expect(vals.every(Number.isFinite)).toBe(true);
    });

    it("rejects a wrong header, naming the file", () => {
        const p = tmpFile("bad.csv", "lambda\n1.0\n");
        expect(() => readEigenvalues(p)).toThrowError(InputError);
        expect(() => readEigenvalues(p)).toThrowError(p);
        expect(() => readEigenvalues(p)).toThrowError(/expected header 'eigenvalue'/);
    });

    it("rejects non-numeric cells with row context", () => {
        const p = tmpFile("bad.csv", "eigenvalue\n1.0\nspam\n");
        expect(() => readEigenvalues(p)).toThrowError(/non-numeric value 'spam'.*row 1/);
    });

    it("rejects an empty file and a missing file", () => {
        expect(() => readEigenvalues(tmpFile("e.csv", ""))).toThrowError(/empty file/);
        expect(() => readEigenvalues("/no/such/file.csv")).toThrowError(/\/no\/such\/file\.csv/);
    });
});

describe("readDensityCurve", () => {
    it("reads the fig-law theory fixture", () => {
        const c = readDensityCurve(join(FIX, "fig-law", "theory.csv"));
        expect(c.x.length).toBe(c.density.length);
        expect(c.x.length).toBeGreaterThan(100);
        for (let i = 1; i < c.x.length; i++) expect(c.x[i]).toBeGreaterThan(c.x[i - 1]!);
    });

    it("rejects non-increasing x", () => {
        const p = tmpFile("t.csv", "x,density\n0,0.1\n0,0.2\n");
        expect(() => readDensityCurve(p)).toThrowError(/x must increase strictly/);
    });

    it("rejects ragged rows", () => {
        const p = tmpFile("t.csv", "x,density\n0,0.1,9\n");
        expect(() => readDensityCurve(p)).toThrowError(/expected 2 fields/);
    });
});

describe("readSweep", () => {
    it("reads the fig-krr fixture: 2 n values x 5 widths x 50 reps", () => {
        const rows = readSweep(join(FIX, "fig-krr", "regress.csv"));
        expect(rows.length).toBe(500);
        expect(new Set(rows.map(r => r.n)).size).toBe(2);
        expect(new Set(rows.map(r => r.d1)).size).toBeGreaterThanOrEqual(5);
    });

    it("returns no rows for a header-only file", () => {
        const p = tmpFile("s.csv",
            "n,d0,d1,lambda,kernel_mode,seed,train_rf,train_k,test_rf,test_k,train_asym,test_asym,lambda_eff\n");
        expect(readSweep(p)).toEqual([]);
    });

    it("rejects a header with missing columns", () => {
        const p = tmpFile("s.csv", "n,d1,test_rf\n1,2,3\n");
        expect(() => readSweep(p)).toThrowError(/expected header/);
    });
});
