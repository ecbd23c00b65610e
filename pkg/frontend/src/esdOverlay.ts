import { InputError, readDensityCurve, readEigenvalues } from "./csv.js";
import { stampInput } from "./hash.js";
import { densityHistogram } from "./histogram.js";
import type { FigureSpec } from "./spec.js";
import { DEFAULT_FRAME, axes, line, linearScale, polyline, rect, svgDocument, text } from "./svg.js";

const BAR_FILL = "#aecde1";
const BAR_EDGE = "#5b8db8";
const CURVE = "#c0392b";

/** Density-normalized eigenvalue histogram with the theory curve on top. */
export function renderEsdOverlay(spec: FigureSpec): string {
    const esdPath = spec.inputs.esd!;
    const theoryPath = spec.inputs.theory!;
    const meta = {
        kind: "esd-overlay",
        inputs: { esd: stampInput(esdPath), theory: stampInput(theoryPath) },
    };
    const eigenvalues = readEigenvalues(esdPath);
    if (eigenvalues.length === 0) throw new InputError(esdPath, "no eigenvalues to draw");
    const theory = readDensityCurve(theoryPath);

    // area check happens inside: a non-unit histogram never reaches the canvas
    const hist = densityHistogram(eigenvalues, spec.style.bins ?? 40);

    const lo = Math.min(hist.edges[0]!, theory.x[0]!);
    const hi = Math.max(hist.edges[hist.edges.length - 1]!, theory.x[theory.x.length - 1]!);
    const ymax = Math.max(...hist.density, ...theory.density) * 1.08;
    const frame = DEFAULT_FRAME;
    const x = linearScale(lo, hi, frame.left, frame.width - frame.right);
    const y = linearScale(0, ymax, frame.height - frame.bottom, frame.top);

    const body: string[] = [];
    for (let i = 0; i < hist.density.length; i++) {
        const d = hist.density[i]!;
        if (d <= 0) continue;
        const x0 = x(hist.edges[i]!);
        const x1 = x(hist.edges[i + 1]!);
        body.push(rect(x0, y(d), x1 - x0, y(0) - y(d), {
            fill: BAR_FILL, stroke: BAR_EDGE, "stroke-width": 0.8,
        }));
    }
    body.push(polyline(theory.x.map((v, i) => [x(v), y(theory.density[i]!)] as [number, number]),
        { stroke: CURVE, "stroke-width": 1.8 }));
    body.push(...axes(frame, x, y, spec.style.xlabel ?? "eigenvalue", spec.style.ylabel ?? "density"));

    const lx = frame.width - frame.right - 150;
    body.push(rect(lx - 8, frame.top + 6, 150, 40, { fill: "#fff", stroke: "#ccc", "stroke-width": 0.8 }));
    body.push(rect(lx, frame.top + 12, 16, 10, { fill: BAR_FILL, stroke: BAR_EDGE, "stroke-width": 0.8 }));
    body.push(text(lx + 22, frame.top + 21, "empirical spectrum", { "font-size": 12 }));
    body.push(line(lx, frame.top + 34, lx + 16, frame.top + 34, { stroke: CURVE, "stroke-width": 1.8 }));
    body.push(text(lx + 22, frame.top + 38, "limit density", { "font-size": 12 }));

    return svgDocument(frame, meta, spec.style.title, body);
}
