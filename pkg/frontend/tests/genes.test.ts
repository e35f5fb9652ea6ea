import { beforeEach, describe, expect, it } from "vitest";
import { renderGenesView } from "../src/views/genes";
import { enrichmentFixture, TRAJ_0 } from "./fixtures";

function click(el: Element): void {
    el.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

describe("gene function view", () => {
    let container: HTMLElement;

    beforeEach(() => {
        container = document.createElement("div");
        document.body.replaceChildren(container);
        renderGenesView(container, enrichmentFixture);
    });

    it("renders one row per term for the analyzed trajectory", () => {
        expect(container.querySelectorAll(".term-row")).toHaveLength(3);
        expect(container.textContent).toContain(TRAJ_0);
    });

    it("highlights exactly the rows the service marked significant", () => {
        const significant = [...container.querySelectorAll(".term-row.significant")];
        expect(significant.map((r) => (r as HTMLElement).dataset.termId)).toEqual([
            "GO:0030198",
            "GO:0001501",
        ]);
        const insignificant = container.querySelector('.term-row[data-term-id="GO:0006955"]')!;
        expect(insignificant.classList).not.toContain("significant");
    });

    it("formats tiny p-values in scientific notation", () => {
        const tiny = container.querySelector('.term-row[data-term-id="GO:0030198"]')!;
        expect(tiny.textContent).toContain("8.00e-6");
        const plain = container.querySelector('.term-row[data-term-id="GO:0006955"]')!;
        expect(plain.textContent).toContain("0.210");
    });

    it("expands a row into its overlapping gene list and collapses again", () => {
        const row = container.querySelector('.term-row[data-term-id="GO:0001501"]')!;
        click(row);
        const detail = row.nextElementSibling!;
        expect(detail.classList).toContain("gene-row");
        expect(detail.querySelectorAll(".gene-list li")).toHaveLength(4);
        expect(detail.textContent).toContain("Sox9");

        click(row);
        expect(row.nextElementSibling?.classList.contains("gene-row")).toBe(false);
        expect(container.querySelector(".gene-row")).toBeNull();
    });

    it("shows an empty state when nothing overlaps", () => {
        renderGenesView(container, { ...enrichmentFixture, rows: [] });
        expect(container.querySelector(".empty-state")).not.toBeNull();
        expect(container.querySelector(".term-row")).toBeNull();
    });
});
