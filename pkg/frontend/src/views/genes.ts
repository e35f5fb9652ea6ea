// Gene function table for one trajectory: ranked enriched terms with their
// test statistics. Rows the service marked significant (p < 0.05) are
// highlighted; clicking a row folds out the overlapping gene list.

import type { EnrichmentPayload, EnrichmentRow } from "../api";

function formatP(p: number): string {
    if (p > 0 && p < 0.001) return p.toExponential(2);
    return p.toFixed(3);
}

export function renderGenesView(
    container: HTMLElement,
    payload: EnrichmentPayload
): void {
    container.replaceChildren();

    const head = document.createElement("p");
    head.className = "view-hint";
    head.textContent = `Enriched functions for trajectory ${payload.trajectory}.`;
    container.appendChild(head);

    if (payload.rows.length === 0) {
        const empty = document.createElement("div");
        empty.className = "empty-state";
        empty.textContent = "No terms overlap this trajectory's gene set.";
        container.appendChild(empty);
        return;
    }

    const table = document.createElement("table");
    table.className = "genes-table";
    const thead = document.createElement("thead");
    thead.innerHTML =
        "<tr><th>Term</th><th>Description</th><th>Namespace</th>" +
        "<th>Overlap</th><th>p</th><th>FDR</th></tr>";
    table.appendChild(thead);
    const tbody = document.createElement("tbody");

    for (const row of payload.rows) {
        tbody.appendChild(termRow(row));
    }
    table.appendChild(tbody);
    container.appendChild(table);
}

function termRow(row: EnrichmentRow): HTMLTableRowElement {
    const tr = document.createElement("tr");
    tr.className = "term-row";
    tr.dataset.termId = row.term_id;
    if (row.significant) tr.classList.add("significant");

    const cells = [
        row.term_id,
        row.name,
        row.namespace,
        `${row.k}/${row.K}`,
        formatP(row.p),
        formatP(row.fdr),
    ];
    cells.forEach((text, i) => {
        const td = document.createElement("td");
        td.textContent = text;
        if (i >= 3) td.className = "num";
        tr.appendChild(td);
    });

    tr.addEventListener("click", () => {
        const open = tr.nextElementSibling;
        if (open && open.classList.contains("gene-row")) {
            open.remove();
            return;
        }
        const detail = document.createElement("tr");
        detail.className = "gene-row";
        const td = document.createElement("td");
        td.colSpan = 6;
        const list = document.createElement("ul");
        list.className = "gene-list";
        for (const gene of row.genes) {
            const li = document.createElement("li");
            li.textContent = gene;
            list.appendChild(li);
        }
        td.appendChild(list);
        detail.appendChild(td);
        tr.after(detail);
    });

    return tr;
}
