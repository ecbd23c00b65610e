export interface Bins {
    edges: number[];
    density: number[];
}

/**
 * Equal-width density histogram: counts / (n * width), so the bar areas sum
 * to one. Normalization happens here because bins are presentation; the CSV
 * stays raw eigenvalues.
 */
export function densityHistogram(values: number[], bins: number): Bins {
    if (values.length === 0) throw new Error("cannot bin an empty sample");
    if (!Number.isInteger(bins) || bins < 1) throw new Error(`bin count must be a positive integer, got ${bins}`);
    let lo = Math.min(...values);
    let hi = Math.max(...values);
    if (lo === hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const width = (hi - lo) / bins;
    const counts = new Array<number>(bins).fill(0);
    for (const v of values) {
        const k = Math.min(Math.floor((v - lo) / width), bins - 1);
        counts[k]! += 1;
    }
    const edges = Array.from({ length: bins + 1 }, (_, i) => lo + i * width);
    const density = counts.map(c => c / (values.length * width));
    const area = histogramArea({ edges, density });
    if (Math.abs(area - 1) > 1e-9) {
        throw new Error(`histogram area ${area} deviates from 1`);
    }
    return { edges, density };
}

export function histogramArea(b: Bins): number {
    let area = 0;
    for (let i = 0; i < b.density.length; i++) {
        area += b.density[i]! * (b.edges[i + 1]! - b.edges[i]!);
    }
    return area;
}
