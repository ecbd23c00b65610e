import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { readSweep, type SweepRow } from "../src/csv.js";
import { summarize } from "../src/errorCurves.js";

const FIX = fileURLToPath(new URL("./fixtures", import.meta.url));

function row(n: number, d1: number, seed: number, test_rf: number, test_asym: number): SweepRow {
    return { n, d1, seed, test_rf, test_asym };
}

describe("summarize", () => {
    it("groups by n then d1 with mean and sample sd", () => {
        const rows = [
            row(20, 80, 0, 3.0, 2.0), row(20, 80, 1, 5.0, 2.0),
            row(20, 40, 0, 7.0, 2.0),
            row(10, 40, 0, 1.0, 0.5),
        ];
        const curves = summarize(rows, "mem.csv");
        expect(curves.map(c => c.n)).toEqual([10, 20]);
        const c20 = curves[1]!;
        expect(c20.asym).toBe(2.0);
        expect(c20.points.map(p => p.d1)).toEqual([40, 80]);
        expect(c20.points[1]!.mean).toBeCloseTo(4.0, 12);
        expect(c20.points[1]!.sd).toBeCloseTo(Math.sqrt(2), 12);
        expect(c20.points[0]!.sd).toBe(0);
    });

    it("rejects inconsistent asymptotes within one n", () => {
        const rows = [row(20, 40, 0, 1.0, 2.0), row(20, 80, 0, 1.0, 2.5)];
        expect(() => summarize(rows, "mem.csv")).toThrowError(/inconsistent test_asym within n=20/);
    });

    it("fig-krr fixture: mean test error approaches the asymptote as d1 grows", () => {
        const curves = summarize(readSweep(join(FIX, "fig-krr", "regress.csv")), "regress.csv");
        expect(curves.length).toBe(2);
        for (const c of curves) {
            const first = c.points[0]!;
            const last = c.points[c.points.length - 1]!;
            expect(last.d1).toBeGreaterThan(first.d1);
            const relFirst = Math.abs(first.mean - c.asym) / c.asym;
            const relLast = Math.abs(last.mean - c.asym) / c.asym;
            expect(relLast).toBeLessThan(relFirst);
            expect(relLast).toBeLessThan(0.15);
        }
    });
});
