// Canned service payloads for view tests: a small limb-bud-flavoured
// project with five cell types, two accepted paths, and one enrichment
// table. Shapes mirror the service's JSON exactly.

import type {
    CellsPayload,
    EnrichmentPayload,
    PathSummaryPayload,
    PathTreePayload,
    SummaryNode,
    TrajectoriesPayload,
    TrajectoryStep,
} from "../src/api";

export const cellsFixture: CellsPayload = {
    project_id: "p1",
    cell_counts: {
        stages: [0, 1, 2, 3],
        series: {
            AER: [12, 20, 6, 0],
            Chondrocyte: [0, 8, 30, 42],
            Hypertrophic: [0, 0, 4, 18],
            Mesenchyme: [40, 55, 38, 22],
            Perichondrium: [0, 5, 12, 16],
        },
    },
    types: ["AER", "Chondrocyte", "Hypertrophic", "Mesenchyme", "Perichondrium"],
};

export const treeFixture: PathTreePayload = {
    project_id: "p1",
    root: "Mesenchyme",
    min_freq: 0,
    nodes: [
        { cell_type: "AER", relation: "ancestor", distance: 1, path_count: 25 },
        { cell_type: "Chondrocyte", relation: "descendant", distance: 1, path_count: 50 },
        { cell_type: "Perichondrium", relation: "descendant", distance: 1, path_count: 30 },
        { cell_type: "Hypertrophic", relation: "descendant", distance: 2, path_count: 12 },
        { cell_type: "Mesenchyme", relation: "root", distance: 0, path_count: 60 },
    ],
    edges: [
        { src_type: "AER", dst_type: "Mesenchyme", weight: 45 },
        { src_type: "Mesenchyme", dst_type: "Chondrocyte", weight: 50 },
        { src_type: "Mesenchyme", dst_type: "Perichondrium", weight: 30 },
        { src_type: "Chondrocyte", dst_type: "Hypertrophic", weight: 12 },
    ],
};

function square(cx: number, cy: number, half: number): [number, number][] {
    return [
        [cx - half, cy - half],
        [cx + half, cy - half],
        [cx + half, cy + half],
        [cx - half, cy + half],
    ];
}

function summaryNode(partial: Partial<SummaryNode> & { cell_type: string }): SummaryNode {
    return {
        populations: [`e12:${partial.cell_type}`],
        n_cells: 100,
        bounds: [-1, 1, -1, 1],
        outer: [square(0, 0, 0.9)],
        inner: [square(0, 0, 0.5)],
        x_hist: [1, 2, 4, 6, 4, 2, 1, 0],
        y_hist: [0, 1, 3, 6, 5, 2, 1, 0],
        centroid: [0, 0],
        theta: 0,
        r_std: 0.5,
        lambda1: 0.6,
        lambda2: 0.4,
        mean_count: 20,
        ...partial,
    };
}

export const PATH_MAIN = "Mesenchyme>Chondrocyte>Hypertrophic";
export const PATH_SIDE = "AER>Mesenchyme>Chondrocyte";

export const summaryFixture: PathSummaryPayload = {
    project_id: "p1",
    core: "Mesenchyme",
    paths: [
        {
            id: PATH_MAIN,
            types: ["Mesenchyme", "Chondrocyte", "Hypertrophic"],
            frequency: 50,
            anchor: [12.4, 7.7],
            nodes: [
                summaryNode({
                    cell_type: "Mesenchyme",
                    n_cells: 120,
                    centroid: [0, 0],
                    theta: 0,
                    // isotropic ceiling: the fan opens to a half-circle
                    r_std: Math.SQRT1_2,
                    mean_count: 40,
                }),
                summaryNode({
                    cell_type: "Chondrocyte",
                    n_cells: 80,
                    bounds: [0.5, 2.5, -0.8, 1.2],
                    outer: [square(1.5, 0.2, 0.8)],
                    inner: [square(1.5, 0.2, 0.4)],
                    centroid: [1.5, 0.2],
                    theta: 0.9,
                    r_std: 0.25,
                    mean_count: 25,
                }),
                summaryNode({
                    cell_type: "Hypertrophic",
                    n_cells: 30,
                    bounds: [1.8, 3.2, -0.5, 0.9],
                    outer: [square(2.5, 0.3, 0.6)],
                    inner: [],
                    centroid: [2.5, 0.3],
                    theta: -1.2,
                    r_std: 0.5,
                    mean_count: 10,
                }),
            ],
            links: [
                {
                    src_type: "Mesenchyme",
                    dst_type: "Chondrocyte",
                    d_ab: 0.15,
                    d_ba: 0.25,
                    d_sym: 0.2,
                },
                {
                    src_type: "Chondrocyte",
                    dst_type: "Hypertrophic",
                    d_ab: 0.7,
                    d_ba: 0.9,
                    d_sym: 0.8,
                },
            ],
        },
        {
            id: PATH_SIDE,
            types: ["AER", "Mesenchyme", "Chondrocyte"],
            frequency: 30,
            anchor: [11.9, 8.1],
            nodes: [
                summaryNode({
                    cell_type: "AER",
                    n_cells: 50,
                    bounds: [-2, 0, -1, 1],
                    outer: [square(-1, 0, 0.7)],
                    inner: [square(-1, 0, 0.35)],
                    centroid: [-1, 0],
                    theta: 2.0,
                    r_std: 0.1,
                    mean_count: 15,
                }),
                summaryNode({
                    cell_type: "Mesenchyme",
                    n_cells: 120,
                    mean_count: 40,
                    r_std: 0.6,
                }),
                summaryNode({
                    cell_type: "Chondrocyte",
                    n_cells: 80,
                    bounds: [0.5, 2.5, -0.8, 1.2],
                    outer: [square(1.5, 0.2, 0.8)],
                    inner: [square(1.5, 0.2, 0.4)],
                    centroid: [1.5, 0.2],
                    theta: 0.9,
                    r_std: 0.25,
                    mean_count: 25,
                }),
            ],
            links: [
                { src_type: "AER", dst_type: "Mesenchyme", d_ab: 0.2, d_ba: 0.4, d_sym: 0.3 },
                {
                    src_type: "Mesenchyme",
                    dst_type: "Chondrocyte",
                    d_ab: 0.45,
                    d_ba: 0.55,
                    d_sym: 0.5,
                },
            ],
        },
    ],
};

function step(
    sample: string,
    stage: number,
    cellType: string,
    count: number,
    at: [number, number],
    withBoundary: boolean
): TrajectoryStep {
    const cells: [number, number][] = [
        [at[0] - 0.3, at[1] - 0.2],
        [at[0] + 0.1, at[1] - 0.3],
        [at[0] + 0.3, at[1] + 0.1],
        [at[0] - 0.1, at[1] + 0.3],
        [at[0] + 0.2, at[1] + 0.2],
    ];
    return {
        node_id: `${sample}:${cellType}`,
        sample_id: sample,
        stage,
        cell_type: cellType,
        count,
        centroid: at,
        boundary: withBoundary ? square(at[0], at[1], 0.45) : [],
        cells,
    };
}

export const TRAJ_0 = `${PATH_MAIN}#0`;
export const TRAJ_1 = `${PATH_MAIN}#1`;

export const trajectoriesFixture: TrajectoriesPayload = {
    project_id: "p1",
    path_id: PATH_MAIN,
    frequency: 50,
    trajectories: [
        {
            trajectory_id: TRAJ_0,
            steps: [
                step("e12", 1, "Mesenchyme", 30, [0, 0], true),
                step("e13", 2, "Chondrocyte", 20, [1.4, 0.3], true),
                step("e14", 3, "Hypertrophic", 8, [2.4, 0.2], false),
            ],
        },
        {
            trajectory_id: TRAJ_1,
            steps: [
                step("e12b", 1, "Mesenchyme", 26, [0.1, -0.1], true),
                step("e13b", 2, "Chondrocyte", 18, [1.5, 0.2], true),
                step("e14b", 3, "Hypertrophic", 11, [2.5, 0.4], true),
            ],
        },
    ],
};

export const enrichmentFixture: EnrichmentPayload = {
    project_id: "p1",
    format: "crosstraj-enrichment",
    version: 1,
    trajectory: TRAJ_0,
    rows: [
        {
            term_id: "GO:0030198",
            name: "extracellular matrix organization",
            namespace: "biological_process",
            k: 6,
            K: 35,
            n: 60,
            N: 400,
            p: 0.000008,
            fdr: 0.00012,
            significant: true,
            genes: ["Col2a1", "Acan", "Comp"],
        },
        {
            term_id: "GO:0001501",
            name: "skeletal system development",
            namespace: "biological_process",
            k: 12,
            K: 40,
            n: 60,
            N: 400,
            p: 0.00042,
            fdr: 0.0038,
            significant: true,
            genes: ["Sox9", "Col2a1", "Acan", "Runx2"],
        },
        {
            term_id: "GO:0006955",
            name: "immune response",
            namespace: "biological_process",
            k: 2,
            K: 80,
            n: 60,
            N: 400,
            p: 0.21,
            fdr: 0.64,
            significant: false,
            genes: ["Il6", "Tnf"],
        },
    ],
};
