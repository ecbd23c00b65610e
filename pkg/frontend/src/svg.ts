export interface Scale {
    (v: number): number;
    readonly lo: number;
    readonly hi: number;
    readonly log: boolean;
}

export function linearScale(lo: number, hi: number, rangeLo: number, rangeHi: number): Scale {
    if (!(hi > lo)) throw new Error(`degenerate axis domain [${lo}, ${hi}]`);
    const f = (v: number) => rangeLo + ((v - lo) / (hi - lo)) * (rangeHi - rangeLo);
    return Object.assign(f, { lo, hi, log: false });
}

export function logScale(lo: number, hi: number, rangeLo: number, rangeHi: number): Scale {
    if (!(lo > 0 && hi > lo)) throw new Error(`log axis needs 0 < lo < hi, got [${lo}, ${hi}]`);
    const [a, b] = [Math.log10(lo), Math.log10(hi)];
    const f = (v: number) => rangeLo + ((Math.log10(v) - a) / (b - a)) * (rangeHi - rangeLo);
    return Object.assign(f, { lo, hi, log: true });
}

/** Round tick positions with a 1/2/5 step covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, target = 6): number[] {
    const span = hi - lo;
    const raw = span / Math.max(target - 1, 1);
    const mag = Math.pow(10, Math.floor(Math.log10(raw)));
    const step = [1, 2, 5, 10].map(m => m * mag).find(s => span / s <= target - 0.5) ?? 10 * mag;
    const first = Math.ceil(lo / step) * step;
    const out: number[] = [];
    for (let v = first; v <= hi + step * 1e-9; v += step) out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
    return out;
}

export function decadeTicks(lo: number, hi: number): number[] {
    const out: number[] = [];
    for (let e = Math.ceil(Math.log10(lo) - 1e-9); Math.pow(10, e) <= hi * (1 + 1e-9); e++) {
        out.push(Math.pow(10, e));
    }
    return out;
}

export function fmtTick(v: number): string {
    if (v === 0) return "0";
    const a = Math.abs(v);
    if (a >= 1e4 || a < 1e-3) {
        const e = Math.floor(Math.log10(a));
        const m = v / Math.pow(10, e);
        const ms = Math.abs(m - 1) < 1e-9 ? "" : `${trim(m)}x`;
        return `${ms}1e${e}`;
    }
    return trim(v);
}

function trim(v: number): string {
    return parseFloat(v.toPrecision(6)).toString();
}

const px = (v: number) => {
    const s = v.toFixed(2);
    return s === "-0.00" ? "0.00" : s;
};

export function esc(s: string): string {
    return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function attrs(a: Record<string, string | number>): string {
    return Object.entries(a).map(([k, v]) => ` ${k}="${typeof v === "number" ? px(v) : esc(v)}"`).join("");
}

export function rect(x: number, y: number, w: number, h: number, extra: Record<string, string | number>): string {
    return `<rect x="${px(x)}" y="${px(y)}" width="${px(w)}" height="${px(h)}"${attrs(extra)}/>`;
}

export function line(x1: number, y1: number, x2: number, y2: number, extra: Record<string, string | number>): string {
    return `<line x1="${px(x1)}" y1="${px(y1)}" x2="${px(x2)}" y2="${px(y2)}"${attrs(extra)}/>`;
}

export function circle(cx: number, cy: number, r: number, extra: Record<string, string | number>): string {
    return `<circle cx="${px(cx)}" cy="${px(cy)}" r="${px(r)}"${attrs(extra)}/>`;
}

export function polyline(pts: Array<[number, number]>, extra: Record<string, string | number>): string {
    const d = pts.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
    return `<polyline points="${d}" fill="none"${attrs(extra)}/>`;
}

export function text(x: number, y: number, s: string, extra: Record<string, string | number> = {}): string {
    return `<text x="${px(x)}" y="${px(y)}"${attrs(extra)}>${esc(s)}</text>`;
}

export interface Frame {
    width: number;
    height: number;
    left: number;
    right: number;
    top: number;
    bottom: number;
}

export const DEFAULT_FRAME: Frame = { width: 640, height: 440, left: 62, right: 18, top: 30, bottom: 48 };

/** Axis lines, ticks, tick labels and axis labels for the plot region. */
export function axes(frame: Frame, x: Scale, y: Scale, xlabel: string, ylabel: string): string[] {
    const { width, height, left, right, top, bottom } = frame;
    const [x0, x1] = [left, width - right];
    const [y0, y1] = [height - bottom, top];
    const out: string[] = [];
    const stroke = { stroke: "#222", "stroke-width": 1 };
    out.push(line(x0, y0, x1, y0, stroke));
    out.push(line(x0, y0, x0, y1, stroke));
    const xt = x.log ? decadeTicks(x.lo, x.hi) : niceTicks(x.lo, x.hi);
    for (const v of xt) {
        const p = x(v);
        out.push(line(p, y0, p, y0 + 5, stroke));
        out.push(text(p, y0 + 19, fmtTick(v), { "text-anchor": "middle", "font-size": 12 }));
    }
    for (const v of niceTicks(y.lo, y.hi, 6)) {
        const p = y(v);
        out.push(line(x0 - 5, p, x0, p, stroke));
        out.push(text(x0 - 8, p + 4, fmtTick(v), { "text-anchor": "end", "font-size": 12 }));
    }
    out.push(text((x0 + x1) / 2, height - 10, xlabel, { "text-anchor": "middle", "font-size": 13 }));
    out.push(`<text x="${px(16)}" y="${px((y0 + y1) / 2)}" text-anchor="middle" font-size="13" transform="rotate(-90 16 ${px((y0 + y1) / 2)})">${esc(ylabel)}</text>`);
    return out;
}

export interface DocumentMeta {
    kind: string;
    inputs: Record<string, { file: string; sha256: string }>;
}

/** Assemble the document; input hashes ride along in <metadata>. */
export function svgDocument(frame: Frame, meta: DocumentMeta, title: string | undefined, body: string[]): string {
    const head = `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}" font-family="sans-serif">`;
    const parts = [head, `<metadata>${esc(JSON.stringify(meta))}</metadata>`];
    parts.push(rect(0, 0, frame.width, frame.height, { fill: "#fff" }));
    if (title) parts.push(text(frame.width / 2, 20, title, { "text-anchor": "middle", "font-size": 14 }));
    parts.push(...body);
    parts.push("</svg>");
    return parts.join("\n") + "\n";
}
