import { beforeEach, describe, expect, it, vi } from "vitest";
import { renderTreeView, type TreeHandlers, type TreeSelection } from "../src/views/tree";
import { cellsFixture, treeFixture } from "./fixtures";

function click(el: Element): void {
    el.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

function noHandlers(overrides: Partial<TreeHandlers> = {}): TreeHandlers {
    return {
        onFilterChange: () => {},
        onToggleType: () => {},
        onCheck: () => {},
        onClear: () => {},
        onExplore: () => {},
        ...overrides,
    };
}

function selection(overrides: Partial<TreeSelection> = {}): TreeSelection {
    return { minFreq: 0, pending: [], results: null, accepted: [], ...overrides };
}

describe("path selection tree", () => {
    let container: HTMLElement;

    beforeEach(() => {
        container = document.createElement("div");
        document.body.replaceChildren(container);
    });

    it("places ancestors left of the core and descendants right", () => {
        renderTreeView(container, treeFixture, cellsFixture, selection(), noHandlers());
        const col = (type: string) =>
            container
                .querySelector(`.tree-node[data-cell-type="${type}"]`)!
                .getAttribute("data-col");
        expect(col("AER")).toBe("0");
        expect(col("Mesenchyme")).toBe("1");
        expect(col("Chondrocyte")).toBe("2");
        expect(col("Perichondrium")).toBe("2");
        expect(col("Hypertrophic")).toBe("3");
        expect(
            container.querySelector('.tree-node[data-cell-type="Mesenchyme"]')!.classList
        ).toContain("core");
    });

    it("draws every adjacent-column link when the filter is off", () => {
        renderTreeView(container, treeFixture, cellsFixture, selection(), noHandlers());
        expect(container.querySelectorAll(".tree-link")).toHaveLength(4);
    });

    it("hides links below the frequency filter", () => {
        renderTreeView(
            container,
            treeFixture,
            cellsFixture,
            selection({ minFreq: 40 }),
            noHandlers()
        );
        const links = [...container.querySelectorAll(".tree-link")];
        expect(links).toHaveLength(2);
        const weights = links.map((l) => Number(l.getAttribute("data-weight")));
        expect(weights.every((w) => w >= 40)).toBe(true);
        expect(weights.sort((a, b) => a - b)).toEqual([45, 50]);
    });

    it("reports filter changes from the toolbar", () => {
        const onFilterChange = vi.fn();
        renderTreeView(
            container,
            treeFixture,
            cellsFixture,
            selection(),
            noHandlers({ onFilterChange })
        );
        const input = container.querySelector<HTMLInputElement>(".freq-input")!;
        input.value = "40";
        click(container.querySelector(".filter-btn")!);
        expect(onFilterChange).toHaveBeenCalledWith(40);
    });

    it("toggles a type into the pending sequence on click", () => {
        const onToggleType = vi.fn();
        renderTreeView(
            container,
            treeFixture,
            cellsFixture,
            selection(),
            noHandlers({ onToggleType })
        );
        click(container.querySelector('.tree-node[data-cell-type="Chondrocyte"]')!);
        expect(onToggleType).toHaveBeenCalledWith("Chondrocyte");
    });

    it("shows a stage chart tooltip on hover", () => {
        renderTreeView(container, treeFixture, cellsFixture, selection(), noHandlers());
        const node = container.querySelector('.tree-node[data-cell-type="Chondrocyte"]')!;
        node.dispatchEvent(new MouseEvent("mouseover", { bubbles: true }));
        const tooltip = container.querySelector(".tooltip")!;
        expect(tooltip.classList).toContain("visible");
        expect(tooltip.querySelector("svg.spark")).not.toBeNull();
        node.dispatchEvent(new MouseEvent("mouseout", { bubbles: true }));
        expect(tooltip.classList).not.toContain("visible");
    });

    it("enables the connection check once two types are pending", () => {
        renderTreeView(
            container,
            treeFixture,
            cellsFixture,
            selection({ pending: ["Mesenchyme"] }),
            noHandlers()
        );
        expect(container.querySelector<HTMLButtonElement>(".check-btn")!.disabled).toBe(true);

        const onCheck = vi.fn();
        renderTreeView(
            container,
            treeFixture,
            cellsFixture,
            selection({ pending: ["Mesenchyme", "Chondrocyte"] }),
            noHandlers({ onCheck })
        );
        const btn = container.querySelector<HTMLButtonElement>(".check-btn")!;
        expect(btn.disabled).toBe(false);
        click(btn);
        expect(onCheck).toHaveBeenCalledOnce();
        expect(container.querySelectorAll(".tree-node.pending")).toHaveLength(2);
    });

    it("renders accepted and rejected candidates with the broken pair flagged", () => {
        renderTreeView(
            container,
            treeFixture,
            cellsFixture,
            selection({
                results: [
                    {
                        sequence: ["Mesenchyme", "Chondrocyte"],
                        accepted: true,
                        path_id: "Mesenchyme>Chondrocyte",
                        frequency: 50,
                    },
                    {
                        sequence: ["Perichondrium", "AER"],
                        accepted: false,
                        reason: "no merged edge for pair",
                        broken_pair: ["Perichondrium", "AER"],
                    },
                ],
            }),
            noHandlers()
        );
        expect(container.querySelectorAll(".candidate.accepted")).toHaveLength(1);
        const rejected = container.querySelector(".candidate.rejected")!;
        expect(rejected.textContent).toContain("no merged edge for pair");
        expect(container.querySelectorAll(".tree-node.broken")).toHaveLength(2);
    });

    it("enables exploration only when a sequence was accepted", () => {
        renderTreeView(container, treeFixture, cellsFixture, selection(), noHandlers());
        expect(container.querySelector<HTMLButtonElement>(".explore-btn")!.disabled).toBe(true);

        const onExplore = vi.fn();
        renderTreeView(
            container,
            treeFixture,
            cellsFixture,
            selection({ accepted: [["Mesenchyme", "Chondrocyte", "Hypertrophic"]] }),
            noHandlers({ onExplore })
        );
        const btn = container.querySelector<HTMLButtonElement>(".explore-btn")!;
        expect(btn.disabled).toBe(false);
        click(btn);
        expect(onExplore).toHaveBeenCalledOnce();
    });
});
