// Small SVG pieces shared by several views: the per-type stage/count line
// charts (cells table, tree tooltips) and the stacked axis projections used
// by the inspection summaries.

import * as d3 from "d3";

export const SPARK_WIDTH = 150;
export const SPARK_HEIGHT = 36;
export const SPARK_PAD = 3;

export interface SparkOptions {
    width?: number;
    height?: number;
    color?: string;
    /** Shared y maximum so charts are comparable across rows. */
    yMax?: number;
}

/**
 * Line chart of cell quantity per stage. Stages where the type is present
 * get an occurrence dot; zero-count stages sit on the baseline with no dot.
 */
export function sparkline(
    stages: number[],
    counts: number[],
    opts: SparkOptions = {}
): SVGSVGElement {
    const width = opts.width ?? SPARK_WIDTH;
    const height = opts.height ?? SPARK_HEIGHT;
    const color = opts.color ?? "#4477aa";
    const top = Math.max(1e-9, opts.yMax ?? d3.max(counts) ?? 0);

    const x = d3
        .scalePoint(stages.map(String), [SPARK_PAD, width - SPARK_PAD])
        .padding(0.1);
    const y = d3.scaleLinear([0, top], [height - SPARK_PAD, SPARK_PAD]);

    const svg = d3
        .create("svg")
        .attr("class", "spark")
        .attr("width", width)
        .attr("height", height)
        .attr("viewBox", `0 0 ${width} ${height}`);

    svg.append("line")
        .attr("class", "spark-baseline")
        .attr("x1", SPARK_PAD)
        .attr("x2", width - SPARK_PAD)
        .attr("y1", y(0))
        .attr("y2", y(0))
        .attr("stroke", "#ddd");

    const line = d3
        .line<number>()
        .x((_, i) => x(String(stages[i])) ?? 0)
        .y((count) => y(count));
    svg.append("path")
        .attr("class", "spark-line")
        .attr("fill", "none")
        .attr("stroke", color)
        .attr("stroke-width", 1.5)
        .attr("d", line(counts));

    svg.append("g")
        .selectAll("circle")
        .data(counts.map((count, i) => ({ count, i })).filter((d) => d.count > 0))
        .join("circle")
        .attr("class", "spark-dot")
        .attr("r", 2.2)
        .attr("cx", (d) => x(String(stages[d.i])) ?? 0)
        .attr("cy", (d) => y(d.count))
        .attr("fill", color);

    return svg.node() as SVGSVGElement;
}

export interface ProjectionLayer {
    hist: number[];
    color: string;
    /** Fraction of the span where this layer's bins start (default 0). */
    from?: number;
    /** Fraction of the span where this layer's bins end (default 1). */
    to?: number;
}

export interface ProjectionGeom {
    /** Top-left corner of the stack. */
    origin: [number, number];
    /** Extent along the projected axis. */
    span: number;
    /** Thickness of one stacked strip. */
    layer: number;
    axis: "x" | "y";
}

/**
 * Sequentially stacked axis projections: layer 0 (the first node of a path)
 * sits next to the axis and later layers expand outward. Each strip is an
 * area chart of that layer's histogram, normalized by the shared maximum so
 * strips stay comparable. Histogram index runs along +x (axis "x") or +y
 * (axis "y") in SVG coordinates; callers flip arrays if their data runs the
 * other way.
 */
export function stackedProjections(
    parent: SVGGElement,
    layers: ProjectionLayer[],
    geom: ProjectionGeom
): void {
    const g = d3.select(parent);
    const peak = Math.max(1e-9, d3.max(layers, (l) => d3.max(l.hist) ?? 0) ?? 0);
    const rise = geom.layer * 0.92;
    const [x0, y0] = geom.origin;

    layers.forEach((layerData, order) => {
        const n = layerData.hist.length;
        const lo = (layerData.from ?? 0) * geom.span;
        const hi = (layerData.to ?? 1) * geom.span;
        const along = (j: number) =>
            n > 1 ? lo + (j / (n - 1)) * (hi - lo) : (lo + hi) / 2;
        const inner = order * geom.layer;
        let d: string | null;
        if (geom.axis === "x") {
            const area = d3
                .area<number>()
                .x((_, j) => x0 + along(j))
                .y0(y0 + inner)
                .y1((v) => y0 + inner + (v / peak) * rise);
            d = area(layerData.hist);
        } else {
            const area = d3
                .area<number>()
                .y((_, j) => y0 + along(j))
                .x0(x0 + inner)
                .x1((v) => x0 + inner + (v / peak) * rise);
            d = area(layerData.hist);
        }
        g.append("path")
            .attr("class", `projection projection-${geom.axis}`)
            .attr("data-order", order)
            .attr("d", d)
            .attr("fill", layerData.color)
            .attr("fill-opacity", 0.6)
            .attr("stroke", "#fff")
            .attr("stroke-width", 0.4);
    });
}
