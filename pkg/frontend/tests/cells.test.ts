import { beforeEach, describe, expect, it, vi } from "vitest";
import { renderCellsView } from "../src/views/cells";
import { cellsFixture } from "./fixtures";

function click(el: Element): void {
    el.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

describe("core cell selection view", () => {
    let container: HTMLElement;

    beforeEach(() => {
        container = document.createElement("div");
        document.body.replaceChildren(container);
    });

    it("renders one row per cell type with a stage line chart", () => {
        renderCellsView(container, cellsFixture, null, { onSelectCore: () => {} });
        const rows = container.querySelectorAll(".cell-row");
        expect(rows).toHaveLength(cellsFixture.types.length);
        rows.forEach((row) => {
            expect(row.querySelector("svg.spark path.spark-line")).not.toBeNull();
        });
    });

    it("marks occurrence dots only at stages where the type is present", () => {
        renderCellsView(container, cellsFixture, null, { onSelectCore: () => {} });
        const row = container.querySelector('.cell-row[data-cell-type="Hypertrophic"]')!;
        // present at stages 2 and 3 only
        expect(row.querySelectorAll(".spark-dot")).toHaveLength(2);
        const full = container.querySelector('.cell-row[data-cell-type="Mesenchyme"]')!;
        expect(full.querySelectorAll(".spark-dot")).toHaveLength(4);
    });

    it("reports the clicked type as the new core", () => {
        const onSelectCore = vi.fn();
        renderCellsView(container, cellsFixture, null, { onSelectCore });
        click(container.querySelector('.cell-row[data-cell-type="Mesenchyme"]')!);
        expect(onSelectCore).toHaveBeenCalledWith("Mesenchyme");
    });

    it("highlights the currently selected core", () => {
        renderCellsView(container, cellsFixture, "Chondrocyte", { onSelectCore: () => {} });
        const selected = container.querySelectorAll(".cell-row.selected");
        expect(selected).toHaveLength(1);
        expect((selected[0] as HTMLElement).dataset.cellType).toBe("Chondrocyte");
    });

    it("shows an empty state when the project has no types", () => {
        renderCellsView(
            container,
            { project_id: "p1", cell_counts: { stages: [], series: {} }, types: [] },
            null,
            { onSelectCore: () => {} }
        );
        expect(container.querySelector(".empty-state")).not.toBeNull();
        expect(container.querySelector(".cell-row")).toBeNull();
    });
});
