// Trajectory inspection: each row is one concrete instance of the selected
// path, with a per-sample distribution map for every step and a trailing
// summary of centroid dots plus per-step coordinate density profiles. The
// row button hands the trajectory to the gene-function analysis.

import * as d3 from "d3";
import type { TrajectoriesPayload, Trajectory, TrajectoryStep } from "../api";
import { colorFor } from "../palette";
import { stackedProjections } from "../charts";

export interface TrajectoriesHandlers {
    onSelectTrajectory(trajectoryId: string): void;
    onEnrich(trajectoryId: string): void;
}

const STEP = 104;
const STEP_GAP = 16;
const LABEL_H = 26;
const LAYER = 8;
const BINS = 14;

export function renderTrajectoriesView(
    container: HTMLElement,
    payload: TrajectoriesPayload,
    selectedTrajectory: string | null,
    handlers: TrajectoriesHandlers
): void {
    container.replaceChildren();

    const head = document.createElement("p");
    head.className = "view-hint";
    head.textContent =
        `Path ${payload.path_id} — frequency ${payload.frequency}, ` +
        `${payload.trajectories.length} trajectories.`;
    container.appendChild(head);

    if (payload.trajectories.length === 0) {
        const empty = document.createElement("div");
        empty.className = "empty-state";
        empty.textContent = "This path has no trajectory instances.";
        container.appendChild(empty);
        return;
    }

    for (const traj of payload.trajectories) {
        container.appendChild(renderRow(traj, selectedTrajectory, handlers));
    }
}

function renderRow(
    traj: Trajectory,
    selectedTrajectory: string | null,
    handlers: TrajectoriesHandlers
): HTMLElement {
    const row = document.createElement("section");
    row.className = "trajectory-row";
    row.dataset.trajectoryId = traj.trajectory_id;
    if (traj.trajectory_id === selectedTrajectory) row.classList.add("selected");
    row.addEventListener("click", () =>
        handlers.onSelectTrajectory(traj.trajectory_id)
    );

    const header = document.createElement("div");
    header.className = "trajectory-row-header";
    const analyze = document.createElement("button");
    analyze.className = "analyze";
    analyze.textContent = "Gene functions";
    analyze.addEventListener("click", (evt) => {
        evt.stopPropagation();
        handlers.onEnrich(traj.trajectory_id);
    });
    header.appendChild(analyze);
    const title = document.createElement("strong");
    title.textContent = traj.trajectory_id;
    header.appendChild(title);
    row.appendChild(header);

    const stripDepth = traj.steps.length * LAYER + 6;
    const summaryW = STEP + stripDepth + 6;
    const width = traj.steps.length * (STEP + STEP_GAP) + 24 + summaryW;
    const height = LABEL_H + STEP + stripDepth + 4;
    const svg = d3
        .select(row)
        .append("svg")
        .attr("class", "trajectory-svg")
        .attr("width", width)
        .attr("height", height)
        .attr("viewBox", `0 0 ${width} ${height}`);
    const body = svg.append("g").attr("transform", `translate(0,${LABEL_H})`);

    traj.steps.forEach((step, i) => {
        drawStep(body, step, i * (STEP + STEP_GAP));
    });
    drawSummary(body, traj.steps, traj.steps.length * (STEP + STEP_GAP) + 24);
    return row;
}

function drawStep(
    parent: d3.Selection<SVGGElement, unknown, null, undefined>,
    step: TrajectoryStep,
    x: number
): void {
    const g = parent
        .append("g")
        .attr("class", "traj-step")
        .attr("data-node-id", step.node_id)
        .attr("transform", `translate(${x},0)`);

    g.append("text")
        .attr("x", 0)
        .attr("y", -14)
        .attr("font-size", 10)
        .attr("fill", "#444")
        .text(`${step.sample_id} · stage ${step.stage}`);
    g.append("text")
        .attr("x", 0)
        .attr("y", -4)
        .attr("font-size", 10)
        .attr("fill", "#777")
        .text(`${step.cell_type} (${step.count})`);

    g.append("rect")
        .attr("class", "panel-frame")
        .attr("width", STEP)
        .attr("height", STEP)
        .attr("fill", "#fff")
        .attr("stroke", "#e0e0e0");

    const xs = step.cells.map((p) => p[0]).concat(step.boundary.map((p) => p[0]));
    const ys = step.cells.map((p) => p[1]).concat(step.boundary.map((p) => p[1]));
    xs.push(step.centroid[0]);
    ys.push(step.centroid[1]);
    const [xmin, xmax] = pad(d3.extent(xs) as [number, number]);
    const [ymin, ymax] = pad(d3.extent(ys) as [number, number]);
    const sx = d3.scaleLinear([xmin, xmax], [2, STEP - 2]);
    const sy = d3.scaleLinear([ymin, ymax], [STEP - 2, 2]);
    const color = colorFor(step.cell_type);

    if (step.boundary.length > 0) {
        const ring = d3
            .line<[number, number]>()
            .x((p) => sx(p[0]))
            .y((p) => sy(p[1]));
        g.append("path")
            .attr("class", "step-boundary")
            .attr("d", `${ring(step.boundary as [number, number][])}Z`)
            .attr("fill", color)
            .attr("fill-opacity", 0.12)
            .attr("stroke", color)
            .attr("stroke-width", 0.8);
    }

    g.append("g")
        .selectAll("circle")
        .data(step.cells)
        .join("circle")
        .attr("class", "cell-dot")
        .attr("cx", (p) => sx(p[0]))
        .attr("cy", (p) => sy(p[1]))
        .attr("r", 1.3)
        .attr("fill", color)
        .attr("fill-opacity", 0.65);

    g.append("circle")
        .attr("class", "step-centroid")
        .attr("cx", sx(step.centroid[0]))
        .attr("cy", sy(step.centroid[1]))
        .attr("r", Math.max(2.5, Math.sqrt(step.count) * 0.8))
        .attr("fill", "none")
        .attr("stroke", "#222")
        .attr("stroke-width", 1.2);
}

function drawSummary(
    parent: d3.Selection<SVGGElement, unknown, null, undefined>,
    steps: TrajectoryStep[],
    x: number
): void {
    const g = parent
        .append("g")
        .attr("class", "trajectory-summary")
        .attr("transform", `translate(${x},0)`);

    g.append("text")
        .attr("x", 0)
        .attr("y", -4)
        .attr("font-size", 10)
        .attr("fill", "#444")
        .text("summary");
    g.append("rect")
        .attr("class", "panel-frame")
        .attr("width", STEP)
        .attr("height", STEP)
        .attr("fill", "#fcfcfc")
        .attr("stroke", "#e0e0e0");

    const xs = steps.flatMap((s) => s.cells.map((p) => p[0]).concat([s.centroid[0]]));
    const ys = steps.flatMap((s) => s.cells.map((p) => p[1]).concat([s.centroid[1]]));
    const [xmin, xmax] = pad(d3.extent(xs) as [number, number]);
    const [ymin, ymax] = pad(d3.extent(ys) as [number, number]);
    const sx = d3.scaleLinear([xmin, xmax], [2, STEP - 2]);
    const sy = d3.scaleLinear([ymin, ymax], [STEP - 2, 2]);

    const maxCount = Math.max(1, ...steps.map((s) => s.count));
    const r = d3.scaleSqrt([0, maxCount], [2, 8]);

    const trail = d3
        .line<TrajectoryStep>()
        .x((s) => sx(s.centroid[0]))
        .y((s) => sy(s.centroid[1]));
    g.append("path")
        .attr("class", "centroid-path")
        .attr("d", trail(steps))
        .attr("fill", "none")
        .attr("stroke", "#777")
        .attr("stroke-dasharray", "3,2");

    for (const step of steps) {
        g.append("circle")
            .attr("class", "summary-dot")
            .attr("data-node-id", step.node_id)
            .attr("cx", sx(step.centroid[0]))
            .attr("cy", sy(step.centroid[1]))
            .attr("r", r(step.count))
            .attr("fill", colorFor(step.cell_type))
            .attr("stroke", "#fff")
            .attr("stroke-width", 0.8);
    }

    // Coordinate density profiles per step (chart binning of the payload's
    // raw cell positions over the shared frame), innermost = first step.
    const binX = d3.bin().domain([xmin, xmax]).thresholds(BINS);
    const binY = d3.bin().domain([ymin, ymax]).thresholds(BINS);
    stackedProjections(
        g.node() as SVGGElement,
        steps.map((s) => ({
            hist: binX(s.cells.map((p) => p[0])).map((b) => b.length),
            color: colorFor(s.cell_type),
        })),
        { origin: [0, STEP + 3], span: STEP, layer: LAYER, axis: "x" }
    );
    stackedProjections(
        g.node() as SVGGElement,
        steps.map((s) => ({
            // flip so data-y up renders top-down consistently with the map
            hist: binY(s.cells.map((p) => p[1])).map((b) => b.length).reverse(),
            color: colorFor(s.cell_type),
        })),
        { origin: [STEP + 3, 0], span: STEP, layer: LAYER, axis: "y" }
    );
}

function pad([lo, hi]: [number, number]): [number, number] {
    if (!Number.isFinite(lo) || !Number.isFinite(hi)) return [0, 1];
    const w = hi - lo;
    if (w <= 0) return [lo - 0.5, hi + 0.5];
    return [lo - 0.05 * w, hi + 0.05 * w];
}
