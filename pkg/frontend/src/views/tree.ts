// Path selection: columnar hierarchy around the core type. Ancestor
// columns sit left of the core, descendants right; links only connect
// adjacent columns in developmental order. The analyst composes candidate
// type sequences by clicking nodes, runs the connection check, and opens
// the inspection tab for accepted paths.

import * as d3 from "d3";
import type {
    CellsPayload,
    PathTreePayload,
    SelectionResult,
    TreeNode,
} from "../api";
import { colorFor } from "../palette";
import { sparkline } from "../charts";

export interface TreeSelection {
    minFreq: number;
    /** Sequence currently being composed, in click order. */
    pending: string[];
    /** Outcome of the most recent connection check, if any. */
    results: SelectionResult[] | null;
    /** Sequences the service has already accepted. */
    accepted: string[][];
}

export interface TreeHandlers {
    onFilterChange(minFreq: number): void;
    onToggleType(cellType: string): void;
    onCheck(): void;
    onClear(): void;
    onExplore(): void;
}

const BOX_W = 122;
const BOX_H = 24;
const COL_GAP = 46;
const ROW_GAP = 10;
const MARGIN = 16;

interface Placement {
    node: TreeNode;
    col: number;
    x: number;
    y: number;
}

function seqLabel(seq: string[]): string {
    return seq.join(" > ");
}

export function renderTreeView(
    container: HTMLElement,
    payload: PathTreePayload,
    cells: CellsPayload | null,
    selection: TreeSelection,
    handlers: TreeHandlers
): void {
    container.replaceChildren();

    const toolbar = document.createElement("div");
    toolbar.className = "tree-toolbar";
    const label = document.createElement("label");
    label.textContent = "Min path frequency ";
    const freqInput = document.createElement("input");
    freqInput.type = "number";
    freqInput.min = "0";
    freqInput.className = "freq-input";
    freqInput.value = String(selection.minFreq);
    label.appendChild(freqInput);
    toolbar.appendChild(label);
    const filterBtn = document.createElement("button");
    filterBtn.className = "filter-btn";
    filterBtn.textContent = "Filter";
    filterBtn.addEventListener("click", () => {
        const v = Number.parseInt(freqInput.value, 10);
        handlers.onFilterChange(Number.isFinite(v) && v > 0 ? v : 0);
    });
    toolbar.appendChild(filterBtn);
    const rootLabel = document.createElement("span");
    rootLabel.className = "tree-root-label";
    rootLabel.textContent = `core: ${payload.root}`;
    toolbar.appendChild(rootLabel);
    container.appendChild(toolbar);

    // --- column layout -----------------------------------------------------
    const rawCol = (n: TreeNode) =>
        n.relation === "root" ? 0 : n.relation === "ancestor" ? -n.distance : n.distance;
    const shift = Math.max(0, ...payload.nodes.map((n) => -rawCol(n)));
    const byCol = new Map<number, TreeNode[]>();
    for (const node of payload.nodes) {
        const col = rawCol(node) + shift;
        if (!byCol.has(col)) byCol.set(col, []);
        // Payload order within a column is already by connected-path count.
        byCol.get(col)!.push(node);
    }
    const cols = [...byCol.keys()].sort((a, b) => a - b);
    const nCols = cols.length === 0 ? 1 : Math.max(...cols) + 1;
    const maxRows = Math.max(1, ...[...byCol.values()].map((v) => v.length));

    const placements: Placement[] = [];
    for (const col of cols) {
        byCol.get(col)!.forEach((node, row) => {
            placements.push({
                node,
                col,
                x: MARGIN + col * (BOX_W + COL_GAP),
                y: MARGIN + row * (BOX_H + ROW_GAP),
            });
        });
    }
    const byType = d3.group(placements, (p) => p.node.cell_type);

    const width = MARGIN * 2 + nCols * BOX_W + (nCols - 1) * COL_GAP;
    const height = MARGIN * 2 + maxRows * (BOX_H + ROW_GAP);

    const canvas = document.createElement("div");
    canvas.className = "tree-canvas";
    container.appendChild(canvas);

    const svg = d3
        .select(canvas)
        .append("svg")
        .attr("class", "tree-svg")
        .attr("width", width)
        .attr("height", height)
        .attr("viewBox", `0 0 ${width} ${height}`);

    // --- links: adjacent columns only, and only at/above the frequency
    // filter (the service applies the same cut when re-queried) -------------
    const drawable: { src: Placement; dst: Placement; weight: number }[] = [];
    for (const edge of payload.edges) {
        if (edge.weight < selection.minFreq) continue;
        for (const src of byType.get(edge.src_type) ?? []) {
            for (const dst of byType.get(edge.dst_type) ?? []) {
                if (dst.col === src.col + 1) drawable.push({ src, dst, weight: edge.weight });
            }
        }
    }
    const wExtent = d3.extent(drawable, (l) => l.weight) as [number, number];
    const wScale =
        drawable.length && wExtent[0] !== wExtent[1]
            ? d3.scaleLinear(wExtent, [1, 4.5])
            : () => 2.25;
    const linkPath = d3
        .linkHorizontal<unknown, [number, number]>()
        .source((d: any) => d.source)
        .target((d: any) => d.target);
    svg.append("g")
        .selectAll("path")
        .data(drawable)
        .join("path")
        .attr("class", "tree-link")
        .attr("data-src", (l) => l.src.node.cell_type)
        .attr("data-dst", (l) => l.dst.node.cell_type)
        .attr("data-weight", (l) => l.weight)
        .attr("fill", "none")
        .attr("stroke", "#8899aa")
        .attr("stroke-opacity", 0.55)
        .attr("stroke-width", (l) => wScale(l.weight))
        .attr("d", (l) =>
            linkPath({
                source: [l.src.x + BOX_W, l.src.y + BOX_H / 2],
                target: [l.dst.x, l.dst.y + BOX_H / 2],
            } as any)
        );

    // --- nodes --------------------------------------------------------------
    const brokenTypes = new Set<string>();
    for (const r of selection.results ?? []) {
        if (!r.accepted && r.broken_pair) r.broken_pair.forEach((t) => brokenTypes.add(t));
    }

    const tooltip = document.createElement("div");
    tooltip.className = "tooltip";
    canvas.appendChild(tooltip);

    const nodeG = svg
        .append("g")
        .selectAll("g")
        .data(placements)
        .join("g")
        .attr("class", "tree-node")
        .attr("data-cell-type", (p) => p.node.cell_type)
        .attr("data-relation", (p) => p.node.relation)
        .attr("data-col", (p) => p.col)
        .classed("core", (p) => p.node.relation === "root")
        .classed("pending", (p) => selection.pending.includes(p.node.cell_type))
        .classed("broken", (p) => brokenTypes.has(p.node.cell_type))
        .attr("transform", (p) => `translate(${p.x},${p.y})`);

    nodeG
        .append("rect")
        .attr("width", BOX_W)
        .attr("height", BOX_H)
        .attr("rx", 4)
        .attr("fill", (p) => colorFor(p.node.cell_type))
        .attr("fill-opacity", 0.18)
        .attr("stroke", (p) => colorFor(p.node.cell_type));

    nodeG
        .append("text")
        .attr("x", 7)
        .attr("y", BOX_H / 2 + 4)
        .attr("font-size", 11)
        .text((p) => {
            const name = p.node.cell_type;
            const order = selection.pending.indexOf(name);
            const tag = order >= 0 ? ` [${order + 1}]` : "";
            const room = 16 - tag.length;
            const short = name.length > room ? `${name.slice(0, room - 1)}…` : name;
            return `${short}${tag}`;
        });

    nodeG.append("title").text(
        (p) => `${p.node.cell_type}\n${p.node.relation}, ${p.node.path_count} paths`
    );

    nodeG
        .on("click", (_evt, p) => handlers.onToggleType(p.node.cell_type))
        .on("mouseover", (_evt, p) => {
            tooltip.replaceChildren();
            const title = document.createElement("strong");
            title.textContent = p.node.cell_type;
            tooltip.appendChild(title);
            const meta = document.createElement("div");
            meta.textContent = `${p.node.path_count} connected paths`;
            tooltip.appendChild(meta);
            const series = cells?.cell_counts.series[p.node.cell_type];
            if (series) {
                tooltip.appendChild(
                    sparkline(cells!.cell_counts.stages, series, {
                        color: colorFor(p.node.cell_type),
                    })
                );
            }
            tooltip.style.left = `${p.x + BOX_W + 10}px`;
            tooltip.style.top = `${p.y}px`;
            tooltip.classList.add("visible");
        })
        .on("mouseout", () => tooltip.classList.remove("visible"));

    // --- candidate strip ----------------------------------------------------
    const strip = document.createElement("div");
    strip.className = "pending-strip";
    const pendingLabel = document.createElement("span");
    pendingLabel.className = "pending-label";
    pendingLabel.textContent = "Sequence:";
    strip.appendChild(pendingLabel);
    if (selection.pending.length === 0) {
        const none = document.createElement("span");
        none.className = "pending-empty";
        none.textContent = "click types in developmental order";
        strip.appendChild(none);
    }
    selection.pending.forEach((cellType) => {
        const chip = document.createElement("span");
        chip.className = "pending-chip";
        chip.textContent = cellType;
        chip.title = "remove from sequence";
        chip.addEventListener("click", () => handlers.onToggleType(cellType));
        strip.appendChild(chip);
    });
    const checkBtn = document.createElement("button");
    checkBtn.className = "check-btn";
    checkBtn.textContent = "Check connection";
    checkBtn.disabled = selection.pending.length < 2;
    checkBtn.addEventListener("click", () => handlers.onCheck());
    strip.appendChild(checkBtn);
    const clearBtn = document.createElement("button");
    clearBtn.className = "clear-btn";
    clearBtn.textContent = "Clear";
    clearBtn.addEventListener("click", () => handlers.onClear());
    strip.appendChild(clearBtn);
    container.appendChild(strip);

    if (selection.results) {
        const box = document.createElement("div");
        box.className = "candidates";
        for (const r of selection.results) {
            const chip = document.createElement("span");
            chip.className = `candidate ${r.accepted ? "accepted" : "rejected"}`;
            chip.textContent = r.accepted
                ? `${seqLabel(r.sequence)} — ok, frequency ${r.frequency}`
                : `${seqLabel(r.sequence)} — ${r.reason}`;
            if (!r.accepted && r.broken_pair) {
                chip.title = `broken pair: ${r.broken_pair.join(" > ")}`;
            }
            box.appendChild(chip);
        }
        container.appendChild(box);
    }

    const footer = document.createElement("div");
    footer.className = "tree-footer";
    if (selection.accepted.length > 0) {
        const list = document.createElement("div");
        list.className = "accepted-list";
        for (const seq of selection.accepted) {
            const item = document.createElement("span");
            item.className = "accepted-seq";
            item.textContent = seqLabel(seq);
            list.appendChild(item);
        }
        footer.appendChild(list);
    }
    const exploreBtn = document.createElement("button");
    exploreBtn.className = "explore-btn";
    exploreBtn.textContent = "Explore paths";
    exploreBtn.disabled = selection.accepted.length === 0;
    exploreBtn.addEventListener("click", () => handlers.onExplore());
    footer.appendChild(exploreBtn);
    container.appendChild(footer);
}
