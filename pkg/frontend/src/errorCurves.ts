import { InputError, readSweep, type SweepRow } from "./csv.js";
import { stampInput } from "./hash.js";
import type { FigureSpec } from "./spec.js";
import { DEFAULT_FRAME, axes, circle, line, logScale, polyline, svgDocument, rect, text } from "./svg.js";

const PALETTE = ["#1f6fb4", "#d03028", "#2d8f4e", "#8256b0", "#8c564b"];

export interface CurvePoint {
    d1: number;
    mean: number;
    sd: number;
}

export interface Curve {
    n: number;
    asym: number;
    points: CurvePoint[];
}

/** Per-n repetition statistics of test_rf over d1, plus the shared asymptote. */
export function summarize(rows: SweepRow[], path: string): Curve[] {
    const byN = new Map<number, SweepRow[]>();
    for (const r of rows) {
        const bucket = byN.get(r.n) ?? [];
        bucket.push(r);
        byN.set(r.n, bucket);
    }
    const curves: Curve[] = [];
    for (const n of [...byN.keys()].sort((a, b) => a - b)) {
        const group = byN.get(n)!;
        const asym = group[0]!.test_asym;
        for (const r of group) {
            if (Math.abs(r.test_asym - asym) > 1e-9 * Math.max(1, Math.abs(asym))) {
                throw new InputError(path, `inconsistent test_asym within n=${n}`);
            }
        }
        const byD1 = new Map<number, number[]>();
        for (const r of group) {
            const vals = byD1.get(r.d1) ?? [];
            vals.push(r.test_rf);
            byD1.set(r.d1, vals);
        }
        const points = [...byD1.keys()].sort((a, b) => a - b).map(d1 => {
            const vals = byD1.get(d1)!;
            const mean = vals.reduce((s, v) => s + v, 0) / vals.length;
            const varSum = vals.reduce((s, v) => s + (v - mean) ** 2, 0);
            const sd = vals.length > 1 ? Math.sqrt(varSum / (vals.length - 1)) : 0;
            return { d1, mean, sd };
        });
        curves.push({ n, asym, points });
    }
    return curves;
}

/** Mean test error vs width with sd bars, one curve per n, dashed asymptotes. */
export function renderErrorCurves(spec: FigureSpec): string {
    const sweepPath = spec.inputs.sweep!;
    const meta = { kind: "error-curves", inputs: { sweep: stampInput(sweepPath) } };
    const rows = readSweep(sweepPath);
    if (rows.length === 0) throw new InputError(sweepPath, "empty sweep: no data rows");
    const curves = summarize(rows, sweepPath);

    const d1s = curves.flatMap(c => c.points.map(p => p.d1));
    if (Math.min(...d1s) <= 0) throw new InputError(sweepPath, "d1 must be positive");
    const yvals: number[] = [];
    for (const c of curves) {
        yvals.push(c.asym);
        for (const p of c.points) {
            yvals.push(p.mean, p.mean + p.sd);
            if (p.mean - p.sd > 0) yvals.push(p.mean - p.sd);
        }
    }
    const ypos = yvals.filter(v => v > 0);
    if (ypos.length === 0) throw new InputError(sweepPath, "no positive test errors to draw on a log axis");

    const frame = DEFAULT_FRAME;
    const x = logScale(Math.min(...d1s) / 1.4, Math.max(...d1s) * 1.4,
        frame.left, frame.width - frame.right);
    const y = logScale(Math.min(...ypos) / 1.6, Math.max(...ypos) * 1.6,
        frame.height - frame.bottom, frame.top);
    const yfloor = y.lo;

    const body: string[] = [];
    curves.forEach((c, i) => {
        const color = PALETTE[i % PALETTE.length]!;
        body.push(line(x(x.lo), y(c.asym), x(x.hi), y(c.asym),
            { stroke: color, "stroke-width": 1.3, "stroke-dasharray": "7 5" }));
        for (const p of c.points) {
            const px_ = x(p.d1);
            const hiBar = y(Math.max(p.mean + p.sd, yfloor));
            const loBar = y(Math.max(p.mean - p.sd, yfloor));
            body.push(line(px_, loBar, px_, hiBar, { stroke: color, "stroke-width": 1.2 }));
            body.push(line(px_ - 3.5, hiBar, px_ + 3.5, hiBar, { stroke: color, "stroke-width": 1.2 }));
            body.push(line(px_ - 3.5, loBar, px_ + 3.5, loBar, { stroke: color, "stroke-width": 1.2 }));
        }
        body.push(polyline(c.points.map(p => [x(p.d1), y(Math.max(p.mean, yfloor))] as [number, number]),
            { stroke: color, "stroke-width": 1.6 }));
        for (const p of c.points) {
            body.push(circle(x(p.d1), y(Math.max(p.mean, yfloor)), 2.6, { fill: color }));
        }
    });
    body.push(...axes(frame, x, y, spec.style.xlabel ?? "network width d1",
        spec.style.ylabel ?? "test error"));

    const lx = frame.width - frame.right - 132;
    const lh = 18 * curves.length + 26;
    body.push(rect(lx - 8, frame.top + 6, 132, lh, { fill: "#fff", stroke: "#ccc", "stroke-width": 0.8 }));
    curves.forEach((c, i) => {
        const color = PALETTE[i % PALETTE.length]!;
        const ly = frame.top + 18 + 18 * i;
        body.push(line(lx, ly, lx + 16, ly, { stroke: color, "stroke-width": 1.6 }));
        body.push(circle(lx + 8, ly, 2.6, { fill: color }));
        body.push(text(lx + 22, ly + 4, `n = ${c.n}`, { "font-size": 12 }));
    });
    const ly = frame.top + 18 + 18 * curves.length;
    body.push(line(lx, ly, lx + 16, ly, { stroke: "#555", "stroke-width": 1.3, "stroke-dasharray": "7 5" }));
    body.push(text(lx + 22, ly + 4, "asymptote", { "font-size": 12 }));

    return svgDocument(frame, meta, spec.style.title, body);
}
