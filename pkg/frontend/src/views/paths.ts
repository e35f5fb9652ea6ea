// Path inspection: one row per accepted path, aligned on the core type's
// column. Node cells show nested spatial contours (98% outer, 94% inner),
// links between adjacent cells encode contour similarity as band thickness
// and intensity, and the trailing summary panel overlays centroid dots,
// direction fans, and sequentially stacked axis projections. Selecting a
// row adds per-column similarity bars comparing all rows.

import * as d3 from "d3";
import type { PathSummary, PathSummaryPayload, SummaryNode } from "../api";
import { colorFor } from "../palette";
import { stackedProjections } from "../charts";

export interface PathsHandlers {
    onSelectPath(pathId: string): void;
    onOpenTrajectories(pathId: string): void;
}

const PANEL = 118;
const GAP = 52;
const LAYER = 9;
const LABEL_H = 18;
const LEFT_PAD = 8;

/** Angular span of a direction fan: 2π·r_std, capped at π (the isotropic
 * ceiling r_std = 1/√2 maps exactly to a half-circle). */
export function arcSpan(rStd: number): number {
    return Math.min(Math.PI, Math.SQRT2 * Math.PI * rStd);
}

interface AlignedPath extends PathSummary {
    anchorIndex: number;
}

function gridOffset(path: AlignedPath, globalAnchor: number): number {
    return globalAnchor - path.anchorIndex;
}

function anchorIndex(path: PathSummary, core: string | null): number {
    if (core !== null) {
        const idx = path.types.indexOf(core);
        if (idx >= 0) return idx;
    }
    return 0;
}

export function renderPathsView(
    container: HTMLElement,
    payload: PathSummaryPayload,
    selectedPath: string | null,
    handlers: PathsHandlers
): void {
    container.replaceChildren();

    if (payload.paths.length === 0) {
        const empty = document.createElement("div");
        empty.className = "empty-state";
        empty.textContent = "No accepted paths yet — compose one in path selection.";
        container.appendChild(empty);
        return;
    }

    const aligned: AlignedPath[] = payload.paths.map((p) => ({
        ...p,
        anchorIndex: anchorIndex(p, payload.core),
    }));
    const globalAnchor = Math.max(...aligned.map((p) => p.anchorIndex));
    const gridCols = Math.max(
        ...aligned.map((p) => gridOffset(p, globalAnchor) + p.nodes.length)
    );
    const maxFreq = Math.max(...aligned.map((p) => p.frequency));

    // Shared similarity encoding: smaller symmetric distance = more similar
    // = thicker, more intense band. One scale across every row so links are
    // comparable between paths.
    const allD = aligned.flatMap((p) => p.links.map((l) => l.d_sym));
    const dExtent = d3.extent(allD) as [number, number];
    const degenerate = allD.length === 0 || dExtent[0] === dExtent[1];
    const opacityOf = degenerate
        ? () => 0.6
        : d3.scaleLinear(dExtent, [0.95, 0.15]);
    const thicknessOf = degenerate
        ? () => 10
        : d3.scaleLinear(dExtent, [18, 3]);
    const similarityOf = degenerate
        ? () => 0.6
        : d3.scaleLinear(dExtent, [1, 0.08]);

    const allCounts = aligned.flatMap((p) => p.nodes.map((n) => n.mean_count));
    const rScale = d3.scaleSqrt([0, Math.max(1e-9, d3.max(allCounts) ?? 0)], [2.5, 9]);

    const colX = (col: number) => LEFT_PAD + col * (PANEL + GAP);
    const summaryX = colX(gridCols) + 14;

    // --- similarity strips above the rows (visible once a row is picked) ---
    if (selectedPath !== null) {
        const strips = document.createElement("div");
        strips.className = "similarity-strips";
        const barH = 9;
        const h = aligned.length * barH + 16;
        const svg = d3
            .select(strips)
            .append("svg")
            .attr("width", summaryX)
            .attr("height", h);
        svg.append("text")
            .attr("x", LEFT_PAD)
            .attr("y", 11)
            .attr("font-size", 10)
            .attr("fill", "#555")
            .text("link similarity by column (row order)");
        for (let g = 0; g < gridCols - 1; g += 1) {
            const entries: { pathId: string; dSym: number }[] = [];
            for (const p of aligned) {
                const linkIdx = g - gridOffset(p, globalAnchor);
                if (linkIdx >= 0 && linkIdx < p.links.length) {
                    entries.push({ pathId: p.id, dSym: p.links[linkIdx].d_sym });
                }
            }
            if (entries.length === 0) continue;
            const strip = svg
                .append("g")
                .attr("class", "similarity-strip")
                .attr("data-col", g)
                .attr("transform", `translate(${colX(g) + PANEL},16)`);
            entries.forEach((e) => {
                const row = aligned.findIndex((p) => p.id === e.pathId);
                strip
                    .append("rect")
                    .attr("class", `sim-bar${e.pathId === selectedPath ? " current" : ""}`)
                    .attr("data-path-id", e.pathId)
                    .attr("x", 0)
                    .attr("y", row * barH)
                    .attr("height", barH - 2)
                    .attr("width", Math.max(1, similarityOf(e.dSym) * (GAP - 4)))
                    .attr("fill", e.pathId === selectedPath ? "#2f6db3" : "#9db4c9");
            });
        }
        container.appendChild(strips);
    }

    // --- one row per path ----------------------------------------------------
    for (const path of aligned) {
        const row = document.createElement("section");
        row.className = "path-row";
        row.dataset.pathId = path.id;
        if (path.id === selectedPath) row.classList.add("row-open");
        row.addEventListener("click", () => handlers.onSelectPath(path.id));

        const header = document.createElement("div");
        header.className = "path-row-header";
        const openBtn = document.createElement("button");
        openBtn.className = "open-traj";
        openBtn.textContent = "Trajectories";
        openBtn.addEventListener("click", (evt) => {
            evt.stopPropagation();
            handlers.onOpenTrajectories(path.id);
        });
        header.appendChild(openBtn);
        const title = document.createElement("strong");
        title.className = "path-title";
        title.textContent = path.types.join(" > ");
        header.appendChild(title);
        const freqLabel = document.createElement("span");
        freqLabel.className = "path-freq";
        freqLabel.textContent = `frequency ${path.frequency}`;
        header.appendChild(freqLabel);
        const track = document.createElement("div");
        track.className = "freq-track";
        const bar = document.createElement("div");
        bar.className = "freq-bar";
        const ratio = maxFreq > 0 ? path.frequency / maxFreq : 0;
        bar.style.width = `${Math.round(ratio * 100)}%`;
        bar.style.opacity = String(0.35 + 0.65 * ratio);
        track.appendChild(bar);
        header.appendChild(track);
        row.appendChild(header);

        const offset = gridOffset(path, globalAnchor);
        const stripDepth = path.nodes.length * LAYER + 8;
        const svgW = summaryX + PANEL + stripDepth + 8;
        const svgH = LABEL_H + PANEL + stripDepth;
        const svg = d3
            .select(row)
            .append("svg")
            .attr("class", "path-row-svg")
            .attr("width", svgW)
            .attr("height", svgH)
            .attr("viewBox", `0 0 ${svgW} ${svgH}`);
        const body = svg.append("g").attr("transform", `translate(0,${LABEL_H})`);

        path.nodes.forEach((node, i) => {
            drawNodePanel(body, node, colX(offset + i), path.id);
            if (i < path.links.length) {
                const link = path.links[i];
                const th = thicknessOf(link.d_sym);
                body.append("rect")
                    .attr("class", "path-link")
                    .attr("data-d-sym", link.d_sym.toFixed(4))
                    .attr("x", colX(offset + i) + PANEL)
                    .attr("width", GAP)
                    .attr("y", PANEL / 2 - th / 2)
                    .attr("height", th)
                    .attr("fill", "#49648c")
                    .attr("fill-opacity", opacityOf(link.d_sym))
                    .append("title")
                    .text(
                        `${link.src_type} > ${link.dst_type}: d_sym ${link.d_sym.toFixed(3)}`
                    );
            }
        });

        drawSummaryPanel(body, path, summaryX, rScale);
        container.appendChild(row);
    }
}

function drawNodePanel(
    parent: d3.Selection<SVGGElement, unknown, null, undefined>,
    node: SummaryNode,
    x: number,
    pathId: string
): void {
    const g = parent
        .append("g")
        .attr("class", "path-node")
        .attr("data-cell-type", node.cell_type)
        .attr("data-path-id", pathId)
        .attr("transform", `translate(${x},0)`);

    g.append("text")
        .attr("x", 0)
        .attr("y", -5)
        .attr("font-size", 10)
        .attr("fill", "#444")
        .text(`${node.cell_type} · ${node.n_cells}`);

    g.append("rect")
        .attr("class", "panel-frame")
        .attr("width", PANEL)
        .attr("height", PANEL)
        .attr("fill", "#fff")
        .attr("stroke", "#e0e0e0");

    const [xmin, xmax, ymin, ymax] = node.bounds;
    const sx = d3.scaleLinear([xmin, xmax], [0, PANEL]);
    const sy = d3.scaleLinear([ymin, ymax], [PANEL, 0]);
    const ring = d3
        .line<[number, number]>()
        .x((p) => sx(p[0]))
        .y((p) => sy(p[1]));
    const color = colorFor(node.cell_type);

    for (const poly of node.outer) {
        g.append("path")
            .attr("class", "contour outer")
            .attr("d", `${ring(poly as [number, number][])}Z`)
            .attr("fill", color)
            .attr("fill-opacity", 0.2)
            .attr("stroke", color)
            .attr("stroke-opacity", 0.8)
            .attr("stroke-width", 0.8);
    }
    for (const poly of node.inner) {
        g.append("path")
            .attr("class", "contour inner")
            .attr("d", `${ring(poly as [number, number][])}Z`)
            .attr("fill", color)
            .attr("fill-opacity", 0.45)
            .attr("stroke", color)
            .attr("stroke-width", 0.8);
    }
}

function drawSummaryPanel(
    parent: d3.Selection<SVGGElement, unknown, null, undefined>,
    path: AlignedPath,
    x: number,
    rScale: d3.ScalePower<number, number>
): void {
    const g = parent
        .append("g")
        .attr("class", "path-summary-panel")
        .attr("transform", `translate(${x},0)`);

    g.append("text")
        .attr("x", 0)
        .attr("y", -5)
        .attr("font-size", 10)
        .attr("fill", "#444")
        .text("summary");

    g.append("rect")
        .attr("class", "panel-frame")
        .attr("width", PANEL)
        .attr("height", PANEL)
        .attr("fill", "#fcfcfc")
        .attr("stroke", "#e0e0e0");

    const xmin = Math.min(...path.nodes.map((n) => n.bounds[0]));
    const xmax = Math.max(...path.nodes.map((n) => n.bounds[1]));
    const ymin = Math.min(...path.nodes.map((n) => n.bounds[2]));
    const ymax = Math.max(...path.nodes.map((n) => n.bounds[3]));
    const ux = d3.scaleLinear([xmin, xmax], [0, PANEL]);
    const uy = d3.scaleLinear([ymin, ymax], [PANEL, 0]);

    const trail = d3
        .line<SummaryNode>()
        .x((n) => ux(n.centroid[0]))
        .y((n) => uy(n.centroid[1]));
    g.append("path")
        .attr("class", "centroid-path")
        .attr("d", trail(path.nodes))
        .attr("fill", "none")
        .attr("stroke", "#777")
        .attr("stroke-dasharray", "3,2");

    for (const node of path.nodes) {
        const color = colorFor(node.cell_type);
        const cx = ux(node.centroid[0]);
        const cy = uy(node.centroid[1]);
        const r = rScale(node.mean_count);
        const span = arcSpan(node.r_std);
        // SVG arcs measure from 12 o'clock clockwise; the payload angle is
        // math-convention (from +x, counter-clockwise).
        const mid = Math.PI / 2 - node.theta;
        const fan = d3.arc()({
            innerRadius: r + 1.5,
            outerRadius: r + 8,
            startAngle: mid - span / 2,
            endAngle: mid + span / 2,
        });
        g.append("path")
            .attr("class", "summary-arc")
            .attr("data-cell-type", node.cell_type)
            .attr("data-theta", node.theta.toFixed(4))
            .attr("data-span", span.toFixed(4))
            .attr("transform", `translate(${cx},${cy})`)
            .attr("d", fan)
            .attr("fill", color)
            .attr("fill-opacity", 0.55);
        g.append("circle")
            .attr("class", "summary-dot")
            .attr("data-cell-type", node.cell_type)
            .attr("cx", cx)
            .attr("cy", cy)
            .attr("r", r)
            .attr("fill", color)
            .attr("stroke", "#fff")
            .attr("stroke-width", 0.8);
    }

    // Stacked projections: layer order = node order, so the innermost strip
    // is the first (leftmost) node. Each layer spans its node's own bounds
    // within the shared frame; y histograms flip because SVG y runs down.
    const spanX = Math.max(1e-9, xmax - xmin);
    const spanY = Math.max(1e-9, ymax - ymin);
    stackedProjections(
        g.node() as SVGGElement,
        path.nodes.map((n) => ({
            hist: n.x_hist,
            color: colorFor(n.cell_type),
            from: (n.bounds[0] - xmin) / spanX,
            to: (n.bounds[1] - xmin) / spanX,
        })),
        { origin: [0, PANEL + 4], span: PANEL, layer: LAYER, axis: "x" }
    );
    stackedProjections(
        g.node() as SVGGElement,
        path.nodes.map((n) => ({
            hist: [...n.y_hist].reverse(),
            color: colorFor(n.cell_type),
            from: (ymax - n.bounds[3]) / spanY,
            to: (ymax - n.bounds[2]) / spanY,
        })),
        { origin: [PANEL + 4, 0], span: PANEL, layer: LAYER, axis: "y" }
    );
}
