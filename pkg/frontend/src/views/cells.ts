// Core cell selection: one table row per cell type with a per-stage
// quantity line chart. Clicking a row picks that type as the core for the
// path tree.

import * as d3 from "d3";
import type { CellsPayload } from "../api";
import { colorFor } from "../palette";
import { sparkline } from "../charts";

export interface CellsHandlers {
    onSelectCore(cellType: string): void;
}

export function renderCellsView(
    container: HTMLElement,
    payload: CellsPayload,
    selectedCore: string | null,
    handlers: CellsHandlers
): void {
    container.replaceChildren();

    if (payload.types.length === 0) {
        const empty = document.createElement("div");
        empty.className = "empty-state";
        empty.textContent = "No cell types in this project yet.";
        container.appendChild(empty);
        return;
    }

    const hint = document.createElement("p");
    hint.className = "view-hint";
    hint.textContent =
        "Pick the core cell type to anchor the developmental hierarchy.";
    container.appendChild(hint);

    const { stages, series } = payload.cell_counts;
    const yMax =
        d3.max(payload.types, (t) => d3.max(series[t] ?? [0]) ?? 0) ?? 0;

    const table = document.createElement("table");
    table.className = "cells-table";
    const thead = document.createElement("thead");
    thead.innerHTML =
        "<tr><th>Cell type</th><th>Cells per stage</th><th>Mean total</th></tr>";
    table.appendChild(thead);

    const tbody = document.createElement("tbody");
    for (const cellType of payload.types) {
        const counts = series[cellType] ?? stages.map(() => 0);
        const row = document.createElement("tr");
        row.className = "cell-row";
        row.dataset.cellType = cellType;
        if (cellType === selectedCore) row.classList.add("selected");

        const name = document.createElement("td");
        name.className = "cell-name";
        const swatch = document.createElement("span");
        swatch.className = "swatch";
        swatch.style.backgroundColor = colorFor(cellType);
        name.appendChild(swatch);
        name.appendChild(document.createTextNode(cellType));
        row.appendChild(name);

        const chart = document.createElement("td");
        chart.className = "cell-chart";
        chart.appendChild(
            sparkline(stages, counts, { color: colorFor(cellType), yMax })
        );
        row.appendChild(chart);

        const total = document.createElement("td");
        total.className = "cell-total";
        total.textContent = (d3.sum(counts) ?? 0).toFixed(1);
        row.appendChild(total);

        row.addEventListener("click", () => handlers.onSelectCore(cellType));
        tbody.appendChild(row);
    }
    table.appendChild(tbody);
    container.appendChild(table);
}
