import { spawnSync } from "node:child_process";
import { createHash } from "node:crypto";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

const FIX = fileURLToPath(new URL("./fixtures", import.meta.url));
const CLI = fileURLToPath(new URL("../dist/render.js", import.meta.url));

function render(...args: string[]) {
    const r = spawnSync(process.execPath, [CLI, ...args], { encoding: "utf8" });
    return { code: r.status, out: r.stdout, err: r.stderr };
}

function sha256(path: string): string {
    return createHash("sha256").update(readFileSync(path)).digest("hex");
}

function metadataOf(svgPath: string): { kind: string; inputs: Record<string, { file: string; sha256: string }> } {
    const svg = readFileSync(svgPath, "utf8");
    const m = svg.match(/<metadata>(.*)<\/metadata>/s);
    expect(m).not.toBeNull();
    const json = m![1]!.replace(/&quot;/g, '"').replace(/&lt;/g, "<").replace(/&gt;/g, ">").replace(/&amp;/g, "&");
    return JSON.parse(json);
}

describe("esd-overlay end to end", () => {
    it("renders the fig-law preset artifacts with input hashes in the metadata", () => {
        const dir = mkdtempSync(join(tmpdir(), "figrender-"));
        const out = join(dir, "fig-law.svg");
        const esd = join(FIX, "fig-law", "esd.csv");
        const theory = join(FIX, "fig-law", "theory.csv");
        const r = render("esd-overlay", esd, theory, out, "--bins", "24", "--title", "spectrum vs limit");
        expect(r.err).toBe("");
        expect(r.code).toBe(0);
        expect(r.out).toContain(out);
        const svg = readFileSync(out, "utf8");
        expect(svg.startsWith("<svg ")).toBe(true);
        expect(svg).toContain("spectrum vs limit");
        expect(svg).toContain("<polyline");
        const bars = svg.match(/fill="#aecde1"/g)!.length - 1; // one legend swatch
        expect(bars).toBeGreaterThanOrEqual(5);
        expect(bars).toBeLessThanOrEqual(24);
        const meta = metadataOf(out);
        expect(meta.kind).toBe("esd-overlay");
        expect(meta.inputs.esd!.sha256).toBe(sha256(esd));
        expect(meta.inputs.theory!.sha256).toBe(sha256(theory));
    });

    it("runs from a spec file with paths relative to it", () => {
        const dir = mkdtempSync(join(tmpdir(), "figrender-"));
        const spec = join(dir, "spec.json");
        writeFileSync(spec, JSON.stringify({
            kind: "esd-overlay",
            inputs: { esd: join(FIX, "fig-law", "esd.csv"), theory: join(FIX, "fig-law", "theory.csv") },
            output: "nested/fig.svg",
            style: { bins: 12, xlabel: "x", ylabel: "p(x)" },
        }));
        const r = render("--spec", spec);
        expect(r.code).toBe(0);
        expect(existsSync(join(dir, "nested", "fig.svg"))).toBe(true);
    });

    it("fails without writing when an input is missing, naming the path", () => {
        const dir = mkdtempSync(join(tmpdir(), "figrender-"));
        const out = join(dir, "fig.svg");
        const r = render("esd-overlay", "/absent/esd.csv", join(FIX, "fig-law", "theory.csv"), out);
        expect(r.code).toBe(1);
        expect(r.err).toContain("/absent/esd.csv");
        expect(existsSync(out)).toBe(false);
    });

    it("fails on a contract-violating csv, naming the path", () => {
        const dir = mkdtempSync(join(tmpdir(), "figrender-"));
        const bad = join(dir, "esd.csv");
        writeFileSync(bad, "value\n1.0\n");
        const r = render("esd-overlay", bad, join(FIX, "fig-law", "theory.csv"), join(dir, "fig.svg"));
        expect(r.code).toBe(1);
        expect(r.err).toContain(bad);
        expect(r.err).toContain("expected header 'eigenvalue'");
        expect(existsSync(join(dir, "fig.svg"))).toBe(false);
    });
});

describe("error-curves end to end", () => {
    it("renders the fig-krr preset artifacts: curves, bars and dashed asymptotes", () => {
        const dir = mkdtempSync(join(tmpdir(), "figrender-"));
        const out = join(dir, "fig-krr.svg");
        const sweep = join(FIX, "fig-krr", "regress.csv");
        const r = render("error-curves", sweep, out);
        expect(r.err).toBe("");
        expect(r.code).toBe(0);
        const svg = readFileSync(out, "utf8");
        const dashed = svg.match(/stroke-dasharray/g)!.length;
        expect(dashed).toBe(3); // one per n plus the legend entry
        expect(svg).toContain("n = 50");
        expect(svg).toContain("n = 100");
        const meta = metadataOf(out);
        expect(meta.kind).toBe("error-curves");
        expect(meta.inputs.sweep!.sha256).toBe(sha256(sweep));
    });

    it("rejects an empty sweep without writing a file", () => {
        const dir = mkdtempSync(join(tmpdir(), "figrender-"));
        const empty = join(dir, "regress.csv");
        writeFileSync(empty,
            "n,d0,d1,lambda,kernel_mode,seed,train_rf,train_k,test_rf,test_k,train_asym,test_asym,lambda_eff\n");
        const out = join(dir, "fig.svg");
        const r = render("error-curves", empty, out);
        expect(r.code).toBe(1);
        expect(r.err).toContain(empty);
        expect(r.err).toContain("empty sweep");
        expect(existsSync(out)).toBe(false);
    });
});

describe("argument handling", () => {
    it("prints usage on missing or unknown kinds", () => {
        for (const args of [[], ["pie", "a", "b"], ["esd-overlay", "only.csv"]]) {
            const r = render(...args);
            expect(r.code).toBe(1);
            expect(r.err).toContain("usage:");
        }
    });

    it("rejects an invalid spec file, naming key and file", () => {
        const dir = mkdtempSync(join(tmpdir(), "figrender-"));
        const spec = join(dir, "spec.json");
        writeFileSync(spec, JSON.stringify({ kind: "pie", inputs: {}, output: "f.svg" }));
        const r = render("--spec", spec);
        expect(r.code).toBe(1);
        expect(r.err).toContain(spec);
        expect(r.err).toContain("$.kind");
    });
});
